#include "dfsos/core.hpp"

#include <cmath>
#include <string>

namespace dfsos {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorKind::NonFiniteEncountered: return "NonFiniteEncountered";
        case ErrorKind::DegenerateDirection: return "DegenerateDirection";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::RankCollapse: return "RankCollapse";
        case ErrorKind::FactorizationFailure: return "FactorizationFailure";
        case ErrorKind::SpecInvalid: return "SpecInvalid";
        case ErrorKind::RaggedRows: return "RaggedRows";
        case ErrorKind::NonNumericField: return "NonNumericField";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::AllCellsFailed: return "AllCellsFailed";
        case ErrorKind::ZeroVector: return "ZeroVector";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

ErrorClass classify_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::SpecInvalid:
            return ErrorClass::Usage;
        case ErrorKind::NonFiniteEncountered:
        case ErrorKind::DegenerateDirection:
        case ErrorKind::SingularSystem:
        case ErrorKind::RankCollapse:
        case ErrorKind::FactorizationFailure:
        case ErrorKind::AllCellsFailed:
        case ErrorKind::ZeroVector:
            return ErrorClass::Numerical;
        default:
            return ErrorClass::Data;
    }
}

void Dataset::validate(bool require_all_classes) const {
    if (K < 1) fail(ErrorKind::InvalidArgument, "class count must be positive");
    if (static_cast<Eigen::Index>(labels.size()) != X.rows())
        fail(ErrorKind::ShapeMismatch, "label count " + std::to_string(labels.size()) +
                                           " differs from row count " + std::to_string(X.rows()));
    if (!feature_names.empty() && static_cast<Eigen::Index>(feature_names.size()) != X.cols())
        fail(ErrorKind::ShapeMismatch, "feature name count differs from column count");
    if (!X.allFinite()) fail(ErrorKind::NonFiniteEncountered, "data matrix has non-finite entries");
    std::vector<int> counts(K, 0);
    for (int label : labels) {
        if (label < 1 || label > K)
            fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " outside 1.." +
                                                 std::to_string(K));
        ++counts[label - 1];
    }
    if (require_all_classes) {
        for (int k = 0; k < K; ++k)
            if (counts[k] == 0) fail(ErrorKind::EmptyClass, "class " + std::to_string(k + 1) + " has no members");
    }
}

VectorXd IndicatorMatrix::class_sums(const VectorXd& v) const {
    VectorXd out = VectorXd::Zero(K());
    for (int i = 0; i < n(); ++i) out(labels[i] - 1) += v(i);
    return out;
}

MatrixXd IndicatorMatrix::class_sums(const MatrixXd& M) const {
    MatrixXd out = MatrixXd::Zero(K(), M.cols());
    for (int i = 0; i < n(); ++i) out.row(labels[i] - 1) += M.row(i);
    return out;
}

VectorXd IndicatorMatrix::expand(const VectorXd& theta) const {
    VectorXd out(n());
    for (int i = 0; i < n(); ++i) out(i) = theta(labels[i] - 1);
    return out;
}

MatrixXd IndicatorMatrix::expand(const MatrixXd& Theta) const {
    MatrixXd out(n(), Theta.cols());
    for (int i = 0; i < n(); ++i) out.row(i) = Theta.row(labels[i] - 1);
    return out;
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::DeflationAPG: return "apg";
        case Method::DeflationADMM: return "admm";
        case Method::DfsosV1: return "dfsos1";
        case Method::DfsosV2: return "dfsos2";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "apg" || name == "deflation-apg") return Method::DeflationAPG;
    if (name == "admm" || name == "deflation-admm") return Method::DeflationADMM;
    if (name == "dfsos1" || name == "dfsos-1") return Method::DfsosV1;
    if (name == "dfsos2" || name == "dfsos-2") return Method::DfsosV2;
    fail(ErrorKind::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

bool is_dfsos(Method m) { return m == Method::DfsosV1 || m == Method::DfsosV2; }

double SosModel::orthogonality_error(const VectorXd& d) const {
    const MatrixXd gram = Theta.transpose() * d.asDiagonal() * Theta;
    return (gram - MatrixXd::Identity(gram.rows(), gram.cols())).norm();
}

void SolverConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::InvalidArgument, what);
    };
    require(std::isfinite(gamma) && gamma > 0, "gamma must be > 0");
    require(lambda >= 0, "lambda must be >= 0");
    require(!lambda_scale || *lambda_scale >= 0, "lambda scale must be >= 0");
    require(rho0 > 0, "rho0 must be > 0");
    require(eta > 0 && eta < 1, "eta must lie in (0,1)");
    require(sigma > 1, "sigma must be > 1");
    require(tol_inner_beta > 0 && tol_outer > 0, "tolerances must be > 0");
    require(max_inner_beta >= 1 && max_outer >= 1, "iteration caps must be >= 1");
    require(mu_admm > 0, "mu must be > 0");
}

SolverConfig gaussian_profile() { return SolverConfig{}; }

SolverConfig ucr_profile() {
    SolverConfig cfg;
    cfg.tol_inner_beta = 1e-5;
    cfg.max_inner_beta = 50;
    cfg.max_outer = 50;
    return cfg;
}

void FitTrace::push(double obj, double orth, double rho_value, int col) {
    objective.push_back(obj);
    orth_residual.push_back(orth);
    rho.push_back(rho_value);
    column.push_back(col);
    iterations = static_cast<int>(objective.size());
}

IndicatorMatrix build_indicator(const std::vector<int>& labels, int K) {
    if (K < 1) fail(ErrorKind::InvalidArgument, "class count must be positive");
    const int n = static_cast<int>(labels.size());
    IndicatorMatrix ind;
    ind.Y = MatrixXd::Zero(n, K);
    ind.class_counts = Eigen::VectorXi::Zero(K);
    ind.labels = labels;
    for (int i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 1 || label > K)
            fail(ErrorKind::LabelOutOfRange, "label " + std::to_string(label) + " outside 1.." +
                                                 std::to_string(K));
        ind.Y(i, label - 1) = 1.0;
        ++ind.class_counts(label - 1);
    }
    for (int k = 0; k < K; ++k)
        if (ind.class_counts(k) == 0) fail(ErrorKind::EmptyClass, "class " + std::to_string(k + 1) + " has no members");
    ind.d = ind.class_counts.cast<double>() / static_cast<double>(n);
    return ind;
}

double sos_objective(const MatrixXd& X, const MatrixXd& Y, const MatrixXd& Theta,
                     const MatrixXd& Beta, double gamma, double lambda) {
    if (X.rows() != Y.rows() || Y.cols() != Theta.rows() || X.cols() != Beta.rows() ||
        Theta.cols() != Beta.cols())
        fail(ErrorKind::ShapeMismatch, "objective operands have incompatible shapes");
    const MatrixXd residual = Y * Theta - X * Beta;
    return residual.squaredNorm() + gamma * Beta.squaredNorm() + lambda * Beta.cwiseAbs().sum();
}

Centered center_columns(const MatrixXd& X) {
    if (X.rows() == 0) fail(ErrorKind::InvalidArgument, "cannot center an empty matrix");
    Centered out;
    out.means = X.colwise().mean().transpose();
    out.X = apply_centering(X, out.means);
    return out;
}

MatrixXd apply_centering(const MatrixXd& X, const VectorXd& means) {
    if (X.cols() != means.size())
        fail(ErrorKind::ShapeMismatch, "data has " + std::to_string(X.cols()) + " columns, model expects " +
                                           std::to_string(means.size()));
    return X.rowwise() - means.transpose();
}

int nonzero_rows(const MatrixXd& Beta) {
    int count = 0;
    for (Eigen::Index j = 0; j < Beta.rows(); ++j)
        if ((Beta.row(j).array() != 0.0).any()) ++count;
    return count;
}

}  // namespace dfsos
