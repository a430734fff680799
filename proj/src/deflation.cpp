#include "dfsos/deflation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <variant>

#include "dfsos/enet.hpp"

namespace dfsos {

DeflationState::DeflationState(const VectorXd& class_weights) : Q(VectorXd::Ones(class_weights.size())), d(class_weights) {}

void DeflationState::accept(const VectorXd& theta) {
    Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
    Q.col(Q.cols() - 1) = theta;
}

namespace {

// (I − QQᵀD)w, applied twice so the result is D-orthogonal to Q to rounding.
VectorXd project_out(const DeflationState& state, VectorXd w) {
    for (int sweep = 0; sweep < 2; ++sweep) w -= state.Q * (state.Q.transpose() * state.d.cwiseProduct(w));
    return w;
}

VectorXd d_normalize(const DeflationState& state, const VectorXd& w) {
    const double a = w.dot(state.d.cwiseProduct(w));
    if (!(a > 1e-14))
        fail(ErrorKind::DegenerateDirection, "discriminant vector gives no usable scoring direction");
    return w / std::sqrt(a);
}

double relative_change(const VectorXd& next, const VectorXd& prev) {
    const double diff = (next - prev).norm();
    if (diff == 0.0) return 0.0;
    const double denom = next.norm();
    return denom > 0.0 ? diff / denom : std::numeric_limits<double>::infinity();
}

}  // namespace

VectorXd theta_update_deflation(const DeflationState& state, const MatrixXd& X, const IndicatorMatrix& ind,
                                const VectorXd& beta) {
    if (X.rows() != ind.n() || beta.size() != X.cols() || state.d.size() != ind.K())
        fail(ErrorKind::ShapeMismatch, "scoring update operands have incompatible shapes");
    const VectorXd w = ind.class_sums(VectorXd(X * beta)).cwiseQuotient(state.d);
    return d_normalize(state, project_out(state, w));
}

FitResult fit_deflation(const Dataset& data, const SolverConfig& cfg, int q, BetaSolver beta_solver) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    data.validate();
    if (q < 1 || q > data.K - 1) fail(ErrorKind::InvalidArgument, "discriminant count must lie in 1..K-1");

    const MatrixXd X = center_columns(data.X).X;
    const IndicatorMatrix ind = build_indicator(data.labels, data.K);
    const VectorXd lambdas = resolve_lambdas(X, ind, init_theta(data.K, q, ind.d, cfg.seed), cfg);

    std::variant<ApgSolver, AdmmSolver> solver =
        beta_solver == BetaSolver::APG ? std::variant<ApgSolver, AdmmSolver>(std::in_place_type<ApgSolver>, X, cfg.gamma)
                                       : std::variant<ApgSolver, AdmmSolver>(std::in_place_type<AdmmSolver>, X,
                                                                             cfg.gamma, cfg.mu_admm);
    const double rho_record = beta_solver == BetaSolver::ADMM ? cfg.mu_admm : 0.0;

    FitResult out;
    FitTrace& trace = out.trace;
    DeflationState state(ind.d);
    std::vector<VectorXd> thetas, betas;
    bool all_converged = true;

    for (int j = 1; j <= q; ++j) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed) + static_cast<std::uint64_t>(j));
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        VectorXd z(data.K);
        for (int k = 0; k < data.K; ++k) z(k) = uniform(rng);

        try {
            VectorXd theta = d_normalize(state, project_out(state, z.cwiseQuotient(state.d)));
            VectorXd beta = VectorXd::Zero(X.cols());
            bool converged = false;
            for (int iter = 1; iter <= cfg.max_outer; ++iter) {
                const VectorXd target = ind.expand(theta);
                const EnetResult r = std::visit(
                    [&](const auto& s) {
                        return s.solve(target, lambdas(j - 1), beta, cfg.tol_inner_beta, cfg.max_inner_beta);
                    },
                    solver);
                VectorXd theta_next = theta_update_deflation(state, X, ind, r.beta);

                const double objective = (ind.expand(theta_next) - X * r.beta).squaredNorm() +
                                         cfg.gamma * r.beta.squaredNorm() + lambdas(j - 1) * r.beta.lpNorm<1>();
                const double orth = (state.Q.transpose() * state.d.cwiseProduct(theta_next)).norm();
                trace.push(objective, orth, rho_record, j);

                const double change = std::max(relative_change(theta_next, theta), relative_change(r.beta, beta));
                theta = std::move(theta_next);
                beta = r.beta;
                if (change < cfg.tol_outer) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                all_converged = false;
                trace.warnings.push_back("column " + std::to_string(j) + " stopped at the iteration cap");
            }
            // Fix the sign so the first nonzero scoring entry is positive; F is unchanged
            // under a joint flip of (θ, β).
            for (Eigen::Index k = 0; k < theta.size(); ++k) {
                if (theta(k) != 0.0) {
                    if (theta(k) < 0) {
                        theta = -theta;
                        beta = -beta;
                    }
                    break;
                }
            }
            state.accept(theta);
            thetas.push_back(std::move(theta));
            betas.push_back(std::move(beta));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateDirection) throw;
            trace.warnings.push_back("column " + std::to_string(j) + " skipped: " + e.what());
        }
    }

    if (thetas.empty()) fail(ErrorKind::DegenerateDirection, "every discriminant column collapsed to zero");

    SosModel& model = out.model;
    model.q = static_cast<int>(thetas.size());
    model.Theta.resize(data.K, model.q);
    model.Beta.resize(X.cols(), model.q);
    for (int i = 0; i < model.q; ++i) {
        model.Theta.col(i) = thetas[static_cast<std::size_t>(i)];
        model.Beta.col(i) = betas[static_cast<std::size_t>(i)];
    }
    model.gamma = cfg.gamma;
    model.lambda = lambdas.maxCoeff();
    model.method = beta_solver == BetaSolver::APG ? Method::DeflationAPG : Method::DeflationADMM;

    trace.converged = all_converged;
    trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace dfsos
