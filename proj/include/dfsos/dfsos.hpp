#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "dfsos/core.hpp"
#include "dfsos/enet.hpp"

namespace dfsos {

enum class SplitKind { V1, V2 };

/// Splitting matrix L with LᵀL = YᵀY/n.
///   V1: L = Y/√n            (n×K, P is n×q)
///   V2: L = diag(√nₖ)/√n    (K×K, P is K×q)
struct SplitVariant {
    SplitKind kind = SplitKind::V1;
    MatrixXd L;

    static SplitVariant make(SplitKind kind, const IndicatorMatrix& ind);

    /// LΘ without a dense product.
    MatrixXd apply(const MatrixXd& Theta, const IndicatorMatrix& ind) const;
    /// LᵀM without a dense product.
    MatrixXd apply_transpose(const MatrixXd& M, const IndicatorMatrix& ind) const;
};

struct BregmanState {
    MatrixXd Theta;
    MatrixXd Beta;
    MatrixXd P;
    MatrixXd B;
    double rho = 0.0;
    double v_track = 0.0;
};

/// Factored saddle system for the scoring update
///   [ (2 + ρ/n)·YᵀY   −YᵀY·1 ] [θ]   [rhs]
///   [ 1ᵀYᵀY             0    ] [v] = [ 0 ]
/// It depends only on ρ and the class counts and is reused across columns.
class ThetaKktSystem {
public:
    ThetaKktSystem(const IndicatorMatrix& ind, double rho);

    /// Returns (θ, v).
    std::pair<VectorXd, double> solve(const VectorXd& rhs) const;

    double rho() const { return rho_; }
    const MatrixXd& matrix() const { return system_; }

private:
    double rho_;
    MatrixXd system_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

struct ThetaUpdate {
    VectorXd theta;
    double multiplier = 0.0;
};

/// Right-hand side 2YᵀXβᵢ + ρLᵀ(Pᵢ − Bᵢ) of the scoring KKT system.
VectorXd theta_kkt_rhs(const IndicatorMatrix& ind, const VectorXd& Xbeta, const SplitVariant& split,
                       const VectorXd& P_col, const VectorXd& B_col, double rho);

ThetaUpdate theta_update_kkt(const IndicatorMatrix& ind, const MatrixXd& X, const VectorXd& beta,
                             const SplitVariant& split, const VectorXd& P_col, const VectorXd& B_col,
                             double rho);

struct BetaUpdate {
    MatrixXd Beta;
    int total_iterations = 0;
    bool converged = true;
};

/// Column-separable elastic-net update, each column warm-started from Beta_prev.
/// `lambdas` holds one weight per column.
BetaUpdate beta_update(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta,
                       double gamma, const VectorXd& lambdas, const MatrixXd& Beta_prev,
                       const SolverConfig& cfg);

/// As above, reusing a solver whose Lipschitz estimate is already computed for X.
BetaUpdate beta_update(const ApgSolver& solver, const MatrixXd& X, const IndicatorMatrix& ind,
                       const MatrixXd& Theta, const VectorXd& lambdas, const MatrixXd& Beta_prev,
                       const SolverConfig& cfg);

struct PUpdate {
    MatrixXd P;
    bool rank_deficient = false;
};

/// Nearest matrix with orthonormal columns to M = LΘ + B (thin SVD, P = UVᵀ).
PUpdate p_update(const MatrixXd& LTheta, const MatrixXd& B);

/// B + LΘ − P.
MatrixXd dual_update(const MatrixXd& B_prev, const MatrixXd& LTheta, const MatrixXd& P);

struct RhoState {
    double rho = 0.0;
    double v_track = 0.0;
};

/// v = ‖P − LΘ‖²_F. Records v when it dropped below η·v_track, otherwise scales ρ by σ.
RhoState rho_schedule(const RhoState& state, double v, double eta, double sigma);

struct LambdaMax {
    double value = 0.0;            // |bound|, or +inf when the ridge solution is zero
    double signed_value = 0.0;     // bound as written, ≤ 0 at the ridge minimiser
    VectorXd per_column;           // |bound| per column, for per-column λᵢ
    MatrixXd ridge_beta;
    bool zero_beta = false;
};

LambdaMax lambda_max(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta, double gamma);

/// Random Θ with ΘᵀDΘ = I and 1ᵀDΘ = 0, via Gram–Schmidt in the D inner product.
MatrixXd init_theta(int K, int q, const VectorXd& d, unsigned seed);

/// Ridge solution (XᵀX + γI)⁻¹XᵀYΘ through the n×n factorization of I + XXᵀ/γ.
MatrixXd init_beta(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta, double gamma);

/// Θ(ΘᵀDΘ)^{-1/2}.
MatrixXd d_polar_reprojection(const MatrixXd& Theta, const VectorXd& d);

/// ℓ1 weights per column resolved from cfg (fixed or scaled from λ_max at Θ0).
VectorXd resolve_lambdas(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta0,
                         const SolverConfig& cfg);

struct FitResult {
    SosModel model;
    FitTrace trace;
};

/// X is centred internally. `theta0` overrides the random initial scoring matrix.
FitResult fit_dfsos(const Dataset& data, const SolverConfig& cfg, int q, SplitKind variant,
                    const std::optional<MatrixXd>& theta0 = std::nullopt);

/// Same as fit_dfsos, also exposing the final splitting state.
FitResult fit_dfsos_state(const Dataset& data, const SolverConfig& cfg, int q, SplitKind variant,
                          const std::optional<MatrixXd>& theta0, BregmanState* final_state);

}  // namespace dfsos
