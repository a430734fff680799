#include "dfsos/dfsos.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dfsos/parallel.hpp"

namespace dfsos {

SplitVariant SplitVariant::make(SplitKind kind, const IndicatorMatrix& ind) {
    SplitVariant split;
    split.kind = kind;
    const double scale = 1.0 / std::sqrt(static_cast<double>(ind.n()));
    if (kind == SplitKind::V1) {
        split.L = ind.Y * scale;
    } else {
        split.L = (ind.class_counts.cast<double>().array().sqrt() * scale).matrix().asDiagonal();
    }
    return split;
}

MatrixXd SplitVariant::apply(const MatrixXd& Theta, const IndicatorMatrix& ind) const {
    const double scale = 1.0 / std::sqrt(static_cast<double>(ind.n()));
    if (kind == SplitKind::V1) return ind.expand(Theta) * scale;
    return ind.d.array().sqrt().matrix().asDiagonal() * Theta;
}

MatrixXd SplitVariant::apply_transpose(const MatrixXd& M, const IndicatorMatrix& ind) const {
    const double scale = 1.0 / std::sqrt(static_cast<double>(ind.n()));
    if (kind == SplitKind::V1) return ind.class_sums(M) * scale;
    return ind.d.array().sqrt().matrix().asDiagonal() * M;
}

ThetaKktSystem::ThetaKktSystem(const IndicatorMatrix& ind, double rho) : rho_(rho) {
    if (!(rho > 0)) fail(ErrorKind::InvalidArgument, "rho must be > 0");
    const int K = ind.K();
    const VectorXd counts = ind.class_counts.cast<double>();
    if ((counts.array() <= 0).any()) fail(ErrorKind::SingularSystem, "empty class in KKT system");
    const double diag_scale = 2.0 + rho / static_cast<double>(ind.n());
    system_ = MatrixXd::Zero(K + 1, K + 1);
    system_.topLeftCorner(K, K).diagonal() = diag_scale * counts;
    system_.topRightCorner(K, 1) = -counts;
    system_.bottomLeftCorner(1, K) = counts.transpose();
    lu_.compute(system_);
}

std::pair<VectorXd, double> ThetaKktSystem::solve(const VectorXd& rhs) const {
    const Eigen::Index K = system_.rows() - 1;
    if (rhs.size() != K) fail(ErrorKind::ShapeMismatch, "KKT right-hand side has wrong length");
    VectorXd full = VectorXd::Zero(K + 1);
    full.head(K) = rhs;
    const VectorXd sol = lu_.solve(full);
    return {sol.head(K), sol(K)};
}

VectorXd theta_kkt_rhs(const IndicatorMatrix& ind, const VectorXd& Xbeta, const SplitVariant& split,
                       const VectorXd& P_col, const VectorXd& B_col, double rho) {
    const MatrixXd diff = P_col - B_col;
    return 2.0 * ind.class_sums(Xbeta) + rho * split.apply_transpose(diff, ind).col(0);
}

ThetaUpdate theta_update_kkt(const IndicatorMatrix& ind, const MatrixXd& X, const VectorXd& beta,
                             const SplitVariant& split, const VectorXd& P_col, const VectorXd& B_col,
                             double rho) {
    if (X.rows() != ind.n() || beta.size() != X.cols() || P_col.size() != split.L.rows() ||
        B_col.size() != P_col.size())
        fail(ErrorKind::ShapeMismatch, "scoring update operands have incompatible shapes");
    const ThetaKktSystem system(ind, rho);
    auto [theta, v] = system.solve(theta_kkt_rhs(ind, X * beta, split, P_col, B_col, rho));
    return {std::move(theta), v};
}

BetaUpdate beta_update(const ApgSolver& solver, const MatrixXd& X, const IndicatorMatrix& ind,
                       const MatrixXd& Theta, const VectorXd& lambdas, const MatrixXd& Beta_prev,
                       const SolverConfig& cfg) {
    const Eigen::Index q = Theta.cols();
    if (Beta_prev.rows() != X.cols() || Beta_prev.cols() != q || lambdas.size() != q)
        fail(ErrorKind::ShapeMismatch, "discriminant update operands have incompatible shapes");
    if (!Theta.allFinite()) fail(ErrorKind::NonFiniteEncountered, "scoring matrix is not finite");
    BetaUpdate out;
    out.Beta.resize(X.cols(), q);
    std::vector<EnetResult> results(static_cast<std::size_t>(q));
    parallel_for(static_cast<std::size_t>(q), [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        const VectorXd target = ind.expand(VectorXd(Theta.col(col)));
        results[i] = solver.solve(target, lambdas(col), Beta_prev.col(col), cfg.tol_inner_beta,
                                  cfg.max_inner_beta);
    });
    for (Eigen::Index i = 0; i < q; ++i) {
        const auto& r = results[static_cast<std::size_t>(i)];
        out.Beta.col(i) = r.beta;
        out.total_iterations += r.iterations;
        out.converged = out.converged && r.converged;
    }
    return out;
}

BetaUpdate beta_update(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta,
                       double gamma, const VectorXd& lambdas, const MatrixXd& Beta_prev,
                       const SolverConfig& cfg) {
    const ApgSolver solver(X, gamma);
    return beta_update(solver, X, ind, Theta, lambdas, Beta_prev, cfg);
}

PUpdate p_update(const MatrixXd& LTheta, const MatrixXd& B) {
    if (LTheta.rows() != B.rows() || LTheta.cols() != B.cols())
        fail(ErrorKind::ShapeMismatch, "P-update operands have incompatible shapes");
    const MatrixXd M = LTheta + B;
    if (!M.allFinite()) fail(ErrorKind::NonFiniteEncountered, "P-update input is not finite");
    Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    PUpdate out;
    out.P = svd.matrixU() * svd.matrixV().transpose();
    const VectorXd& s = svd.singularValues();
    out.rank_deficient = s.size() > 0 && s(s.size() - 1) < 1e-12;
    return out;
}

MatrixXd dual_update(const MatrixXd& B_prev, const MatrixXd& LTheta, const MatrixXd& P) {
    if (B_prev.rows() != LTheta.rows() || B_prev.cols() != LTheta.cols() || P.rows() != B_prev.rows() ||
        P.cols() != B_prev.cols())
        fail(ErrorKind::ShapeMismatch, "dual update operands have incompatible shapes");
    return B_prev + LTheta - P;
}

RhoState rho_schedule(const RhoState& state, double v, double eta, double sigma) {
    RhoState next = state;
    if (v < eta * state.v_track)
        next.v_track = v;
    else
        next.rho = sigma * state.rho;
    return next;
}

MatrixXd init_beta(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta, double gamma) {
    if (!(gamma > 0)) fail(ErrorKind::InvalidArgument, "gamma must be > 0");
    if (X.rows() != ind.n() || Theta.rows() != ind.K())
        fail(ErrorKind::ShapeMismatch, "ridge initialisation operands have incompatible shapes");
    const MatrixXd M = X.transpose() * ind.expand(Theta);
    MatrixXd inner = X * X.transpose() / gamma;
    inner.diagonal().array() += 1.0;
    const Eigen::LLT<MatrixXd> chol(inner);
    if (chol.info() != Eigen::Success)
        fail(ErrorKind::FactorizationFailure, "I + XXᵀ/γ is not positive definite");
    const MatrixXd V = chol.solve(X * M);
    return (M - X.transpose() * V / gamma) / gamma;
}

LambdaMax lambda_max(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta, double gamma) {
    LambdaMax out;
    out.ridge_beta = init_beta(X, ind, Theta, gamma);
    const MatrixXd YTheta = ind.expand(Theta);
    const MatrixXd XtYTheta = X.transpose() * YTheta;
    const double l1 = out.ridge_beta.cwiseAbs().sum();
    const double scale = X.norm() * YTheta.norm();
    const Eigen::Index q = Theta.cols();
    out.per_column = VectorXd::Constant(q, std::numeric_limits<double>::infinity());
    if (l1 == 0.0 || XtYTheta.norm() <= 1e-12 * scale) {
        out.zero_beta = true;
        out.value = std::numeric_limits<double>::infinity();
        out.signed_value = out.value;
        return out;
    }
    double numerator = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
        const VectorXd b = out.ridge_beta.col(i);
        const VectorXd Xb = X * b;
        const double term = Xb.squaredNorm() + gamma * b.squaredNorm() - 2.0 * Xb.dot(YTheta.col(i));
        numerator += term;
        const double col_l1 = b.lpNorm<1>();
        if (col_l1 > 0) out.per_column(i) = std::abs(term) / col_l1;
    }
    out.signed_value = numerator / l1;
    out.value = std::abs(out.signed_value);
    return out;
}

MatrixXd init_theta(int K, int q, const VectorXd& d, unsigned seed) {
    if (q < 1 || q > K - 1)
        fail(ErrorKind::InvalidArgument, "discriminant count must lie in 1..K-1");
    if (d.size() != K || (d.array() <= 0).any())
        fail(ErrorKind::InvalidArgument, "class weights must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const auto d_dot = [&](const VectorXd& a, const VectorXd& b) { return a.dot(d.cwiseProduct(b)); };

    for (int attempt = 0; attempt < 10; ++attempt) {
        MatrixXd basis(K, q + 1);
        basis.col(0) = VectorXd::Ones(K);  // 1ᵀD1 = Σnₖ/n = 1
        bool collapsed = false;
        for (int i = 0; i < q && !collapsed; ++i) {
            VectorXd u(K);
            for (int k = 0; k < K; ++k) u(k) = normal(rng);
            const double u_norm = d_dot(u, u);
            VectorXd t = u;
            // Two Gram–Schmidt sweeps keep ΘᵀDΘ = I to rounding.
            for (int sweep = 0; sweep < 2; ++sweep)
                for (int c = 0; c <= i; ++c) t -= basis.col(c) * d_dot(basis.col(c), t);
            const double a = d_dot(t, t);
            if (!(a > 1e-10 * u_norm)) {
                collapsed = true;
                break;
            }
            basis.col(i + 1) = t / std::sqrt(a);
        }
        if (!collapsed) return basis.rightCols(q);
    }
    fail(ErrorKind::RankCollapse, "Gram–Schmidt collapsed in every retry");
}

MatrixXd d_polar_reprojection(const MatrixXd& Theta, const VectorXd& d) {
    const MatrixXd gram = Theta.transpose() * d.asDiagonal() * Theta;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const VectorXd& evals = eig.eigenvalues();
    if (evals.size() == 0) return Theta;
    if (!(evals(0) > 1e-14 * std::max(1.0, evals(evals.size() - 1))))
        fail(ErrorKind::SingularSystem, "scoring matrix lost rank; cannot re-project");
    const MatrixXd inv_sqrt =
        eig.eigenvectors() * evals.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return Theta * inv_sqrt;
}

VectorXd resolve_lambdas(const MatrixXd& X, const IndicatorMatrix& ind, const MatrixXd& Theta0,
                         const SolverConfig& cfg) {
    const Eigen::Index q = Theta0.cols();
    if (!cfg.lambda_scale) return VectorXd::Constant(q, cfg.lambda);
    const double scale = *cfg.lambda_scale;
    if (scale == 0.0) return VectorXd::Zero(q);
    const LambdaMax lm = lambda_max(X, ind, Theta0, cfg.gamma);
    if (cfg.per_column_lambda) return scale * lm.per_column;
    return VectorXd::Constant(q, scale * lm.value);
}

namespace {

double relative_change(const MatrixXd& next, const MatrixXd& prev) {
    const double diff = (next - prev).norm();
    if (diff == 0.0) return 0.0;
    const double denom = next.norm();
    return denom > 0.0 ? diff / denom : std::numeric_limits<double>::infinity();
}

}  // namespace

FitResult fit_dfsos_state(const Dataset& data, const SolverConfig& cfg, int q, SplitKind variant,
                          const std::optional<MatrixXd>& theta0, BregmanState* final_state) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    data.validate();
    if (q < 1 || q > data.K - 1) fail(ErrorKind::InvalidArgument, "discriminant count must lie in 1..K-1");

    const MatrixXd X = center_columns(data.X).X;
    const IndicatorMatrix ind = build_indicator(data.labels, data.K);
    const SplitVariant split = SplitVariant::make(variant, ind);

    BregmanState state;
    if (theta0) {
        if (theta0->rows() != data.K || theta0->cols() != q)
            fail(ErrorKind::ShapeMismatch, "initial scoring matrix must be K×q");
        state.Theta = *theta0;
    } else {
        state.Theta = init_theta(data.K, q, ind.d, cfg.seed);
    }
    const VectorXd lambdas = resolve_lambdas(X, ind, state.Theta, cfg);
    state.Beta = init_beta(X, ind, state.Theta, cfg.gamma);
    state.P = split.apply(state.Theta, ind);
    state.B = MatrixXd::Zero(state.P.rows(), state.P.cols());
    state.rho = cfg.rho0;
    state.v_track = 2.0 * state.P.squaredNorm();

    FitResult out;
    FitTrace& trace = out.trace;
    trace.converged = false;

    const ApgSolver solver(X, cfg.gamma);
    std::optional<ThetaKktSystem> kkt;
    MatrixXd XBeta = X * state.Beta;
    bool warned_rank = false;

    for (int iter = 1; iter <= cfg.max_outer; ++iter) {
        if (!kkt || kkt->rho() != state.rho) kkt.emplace(ind, state.rho);

        MatrixXd Theta_next(data.K, q);
        for (int i = 0; i < q; ++i) {
            const VectorXd rhs =
                theta_kkt_rhs(ind, XBeta.col(i), split, state.P.col(i), state.B.col(i), state.rho);
            Theta_next.col(i) = kkt->solve(rhs).first;
        }

        BetaUpdate beta = beta_update(solver, X, ind, Theta_next, lambdas, state.Beta, cfg);

        const MatrixXd LTheta = split.apply(Theta_next, ind);
        PUpdate p = p_update(LTheta, state.B);
        if (p.rank_deficient && !warned_rank) {
            trace.warnings.push_back("P-update input was rank deficient at iteration " + std::to_string(iter));
            warned_rank = true;
        }
        state.B = dual_update(state.B, LTheta, p.P);
        state.P = std::move(p.P);

        const double v = (state.P - LTheta).squaredNorm();
        const double rho_used = state.rho;
        const RhoState next = rho_schedule({state.rho, state.v_track}, v, cfg.eta, cfg.sigma);
        state.rho = next.rho;
        state.v_track = next.v_track;

        const double change =
            std::max(relative_change(Theta_next, state.Theta), relative_change(beta.Beta, state.Beta));
        state.Theta = std::move(Theta_next);
        state.Beta = std::move(beta.Beta);
        XBeta = X * state.Beta;

        double objective = (ind.expand(state.Theta) - XBeta).squaredNorm() + cfg.gamma * state.Beta.squaredNorm();
        for (int i = 0; i < q; ++i) objective += lambdas(i) * state.Beta.col(i).lpNorm<1>();
        if (!std::isfinite(objective)) fail(ErrorKind::NonFiniteEncountered, "objective diverged");
        const double orth = std::sqrt(v);
        trace.push(objective, orth, rho_used);

        if (std::max(change, orth) < cfg.tol_outer) {
            trace.converged = true;
            break;
        }
    }
    if (!trace.converged)
        trace.warnings.push_back("outer loop stopped at the iteration cap of " + std::to_string(cfg.max_outer));

    SosModel& model = out.model;
    model.Theta = d_polar_reprojection(state.Theta, ind.d);
    model.Beta = state.Beta;
    model.q = q;
    model.gamma = cfg.gamma;
    model.lambda = lambdas.maxCoeff();
    model.method = variant == SplitKind::V1 ? Method::DfsosV1 : Method::DfsosV2;

    trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (final_state) *final_state = std::move(state);
    return out;
}

FitResult fit_dfsos(const Dataset& data, const SolverConfig& cfg, int q, SplitKind variant,
                    const std::optional<MatrixXd>& theta0) {
    return fit_dfsos_state(data, cfg, q, variant, theta0, nullptr);
}

}  // namespace dfsos
