#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dfsos/errors.hpp"

namespace dfsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observations (rows of X) with 1-based class labels.
struct Dataset {
    MatrixXd X;
    std::vector<int> labels;
    int K = 0;
    std::vector<std::string> feature_names;
    /// Original label value of class k+1, as read from disk. Empty when labels
    /// were generated directly as 1..K.
    std::vector<double> class_values;

    int n() const { return static_cast<int>(X.rows()); }
    int p() const { return static_cast<int>(X.cols()); }

    /// Checks shapes, label range and finiteness. Held-out data may leave
    /// some classes empty, so that check is optional.
    void validate(bool require_all_classes = true) const;
};

/// One-hot class membership Y together with D = YᵀY/n, stored as its diagonal.
struct IndicatorMatrix {
    MatrixXd Y;
    Eigen::VectorXi class_counts;
    VectorXd d;

    int n() const { return static_cast<int>(Y.rows()); }
    int K() const { return static_cast<int>(Y.cols()); }
    Eigen::DiagonalMatrix<double, Eigen::Dynamic> D() const { return d.asDiagonal(); }

    /// Yᵀv without forming the product: per-class sums of v.
    VectorXd class_sums(const VectorXd& v) const;
    MatrixXd class_sums(const MatrixXd& M) const;
    /// Yθ: broadcasts each class score to its observations.
    VectorXd expand(const VectorXd& theta) const;
    MatrixXd expand(const MatrixXd& Theta) const;

    std::vector<int> labels;
};

enum class Method { DeflationAPG, DeflationADMM, DfsosV1, DfsosV2 };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
bool is_dfsos(Method m);

/// Paired scoring matrix Θ (K×q) and discriminant matrix B (p×q).
struct SosModel {
    MatrixXd Theta;
    MatrixXd Beta;
    int q = 0;
    double lambda = 0.0;
    double gamma = 0.0;
    Method method = Method::DfsosV1;

    /// ‖(1/n)ΘᵀYᵀYΘ − I‖_F, i.e. ‖ΘᵀDΘ − I‖_F.
    double orthogonality_error(const VectorXd& d) const;
};

struct SolverConfig {
    double gamma = 0.1;
    /// ℓ1 weight used when lambda_scale is empty.
    double lambda = 0.0;
    /// When set, λ = lambda_scale · λ_max with λ_max computed from the initial Θ.
    std::optional<double> lambda_scale;
    double rho0 = 5.0;
    double eta = 0.25;
    double sigma = 2.0;
    double tol_inner_beta = 1e-4;
    int max_inner_beta = 100;
    double tol_outer = 1e-4;
    int max_outer = 500;
    double mu_admm = 2.0;
    unsigned seed = 0;
    /// Separate λᵢ per discriminant column, each scaled from its own λ_max bound.
    bool per_column_lambda = false;

    void validate() const;
};

/// Paper defaults for the synthetic Gaussian experiments.
SolverConfig gaussian_profile();
/// Paper defaults for the time-series repository experiments.
SolverConfig ucr_profile();

struct FitTrace {
    std::vector<double> objective;
    std::vector<double> orth_residual;
    std::vector<double> rho;
    /// Discriminant column each record belongs to (always 0 for joint fits).
    std::vector<int> column;
    int iterations = 0;
    double wall_time_s = 0.0;
    bool converged = true;
    bool beta_warm_start = true;
    std::vector<std::string> warnings;

    void push(double obj, double orth, double rho_value, int col = 0);
};

IndicatorMatrix build_indicator(const std::vector<int>& labels, int K);

/// Σᵢ ‖Yθᵢ − Xβᵢ‖² + γ‖βᵢ‖² + λ‖βᵢ‖₁.
double sos_objective(const MatrixXd& X, const MatrixXd& Y, const MatrixXd& Theta,
                     const MatrixXd& Beta, double gamma, double lambda);

struct Centered {
    MatrixXd X;
    VectorXd means;
};

Centered center_columns(const MatrixXd& X);

/// Returns X with `means` removed from every row.
MatrixXd apply_centering(const MatrixXd& X, const VectorXd& means);

/// Counts exact zeros; coordinates zeroed by soft-thresholding are stored as 0.0.
int nonzero_rows(const MatrixXd& Beta);

}  // namespace dfsos
