#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dfsos/core.hpp"

namespace dfsos {

/// minimize ‖target − Xβ‖² + γ‖β‖² + λ‖β‖₁
struct EnetProblem {
    Eigen::Ref<const MatrixXd> X;
    Eigen::Ref<const VectorXd> target;
    double gamma;
    double lambda;
};

struct EnetResult {
    VectorXd beta;
    int iterations = 0;
    bool converged = false;  // false: iteration cap reached, beta is the best iterate
    double objective = 0.0;
    double optimality = 0.0;
};

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

double enet_objective(const EnetProblem& prob, const VectorXd& beta);

/// Largest violation of 0 ∈ ∂f(β): max(|gⱼ| − λ, 0) where βⱼ = 0, |gⱼ + λ·sign βⱼ| otherwise,
/// with g = 2Xᵀ(Xβ − target) + 2γβ.
double optimality_residual(const EnetProblem& prob, const VectorXd& beta);

/// Every λ at or above this bound makes β = 0 optimal.
double dead_zone_lambda(const MatrixXd& X, const VectorXd& target);

/// σ_max(XᵀX) from a fixed number of power-iteration steps (a lower estimate).
double gram_spectral_norm(const MatrixXd& X, int steps = 30);

/// Accelerated proximal gradient (FISTA) with function-value restart. The Lipschitz
/// constant 2(σ_max(XᵀX) + γ) is estimated once per design matrix and raised by
/// backtracking whenever the quadratic upper bound fails.
class ApgSolver {
public:
    /// X must outlive the solver.
    ApgSolver(const MatrixXd& X, double gamma, int power_steps = 30);

    EnetResult solve(const VectorXd& target, double lambda, const VectorXd& beta0, double tol,
                     int max_iter) const;

    double lipschitz() const { return lipschitz_; }

private:
    const MatrixXd* X_;
    double gamma_;
    double lipschitz_;
};

/// β–z consensus ADMM with z carrying the ℓ1 term and fixed penalty μ. The β-step system
/// 2XᵀX + (2γ + μ)I is factored once; for p > n through the n×n Woodbury form.
class AdmmSolver {
public:
    AdmmSolver(const MatrixXd& X, double gamma, double mu);

    EnetResult solve(const VectorXd& target, double lambda, const VectorXd& beta0, double tol,
                     int max_iter) const;

private:
    VectorXd solve_system(const VectorXd& rhs) const;

    const MatrixXd* X_;
    double gamma_;
    double mu_;
    bool woodbury_;
    Eigen::LLT<MatrixXd> factor_;
};

EnetResult apg_solve(const EnetProblem& prob, const VectorXd& beta0, double tol, int max_iter);
EnetResult admm_solve(const EnetProblem& prob, const VectorXd& beta0, double mu, double tol,
                      int max_iter);

}  // namespace dfsos
