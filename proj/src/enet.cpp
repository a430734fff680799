#include "dfsos/enet.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace dfsos {

namespace {

double smooth_value(const VectorXd& Xb, const VectorXd& target, const VectorXd& beta, double gamma) {
    return (Xb - target).squaredNorm() + gamma * beta.squaredNorm();
}

double optimality_from_gradient(const VectorXd& beta, const VectorXd& grad, double lambda) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double v;
        if (beta(j) == 0.0)
            v = std::max(std::abs(grad(j)) - lambda, 0.0);
        else
            v = std::abs(grad(j) + (beta(j) > 0 ? lambda : -lambda));
        worst = std::max(worst, v);
    }
    return worst;
}

void check_shapes(const MatrixXd& X, const VectorXd& target, const VectorXd& beta0) {
    if (target.size() != X.rows() || beta0.size() != X.cols())
        fail(ErrorKind::ShapeMismatch, "elastic-net problem has incompatible shapes");
}

}  // namespace

double enet_objective(const EnetProblem& prob, const VectorXd& beta) {
    const VectorXd Xb = prob.X * beta;
    return (Xb - prob.target).squaredNorm() + prob.gamma * beta.squaredNorm() +
           prob.lambda * beta.lpNorm<1>();
}

double optimality_residual(const EnetProblem& prob, const VectorXd& beta) {
    const VectorXd grad =
        2.0 * (prob.X.transpose() * (prob.X * beta - prob.target)) + 2.0 * prob.gamma * beta;
    return optimality_from_gradient(beta, grad, prob.lambda);
}

double dead_zone_lambda(const MatrixXd& X, const VectorXd& target) {
    if (X.cols() == 0) return 0.0;
    return (2.0 * (X.transpose() * target)).lpNorm<Eigen::Infinity>();
}

double gram_spectral_norm(const MatrixXd& X, int steps) {
    if (X.size() == 0) return 0.0;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    VectorXd v(X.cols());
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
    v.normalize();
    for (int s = 0; s < steps; ++s) {
        VectorXd w = X.transpose() * (X * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
    }
    return (X * v).squaredNorm();
}

ApgSolver::ApgSolver(const MatrixXd& X, double gamma, int power_steps)
    : X_(&X), gamma_(gamma), lipschitz_(2.0 * (gram_spectral_norm(X, power_steps) + gamma)) {
    if (!(gamma >= 0)) fail(ErrorKind::InvalidArgument, "gamma must be >= 0");
    if (lipschitz_ <= 0.0) lipschitz_ = 1.0;
}

EnetResult ApgSolver::solve(const VectorXd& target, double lambda, const VectorXd& beta0, double tol,
                            int max_iter) const {
    const MatrixXd& X = *X_;
    check_shapes(X, target, beta0);
    const double gamma = gamma_;
    double L = lipschitz_;

    auto gradient = [&](const VectorXd& b, const VectorXd& Xb) -> VectorXd {
        return 2.0 * (X.transpose() * (Xb - target)) + 2.0 * gamma * b;
    };

    VectorXd x = beta0;
    VectorXd Xx = X * x;
    VectorXd gx = gradient(x, Xx);
    double Fx = smooth_value(Xx, target, x, gamma) + lambda * x.lpNorm<1>();
    if (!std::isfinite(Fx)) fail(ErrorKind::NonFiniteEncountered, "initial objective is not finite");

    EnetResult result;
    result.optimality = optimality_from_gradient(x, gx, lambda);
    if (result.optimality <= tol) {
        result.beta = std::move(x);
        result.objective = Fx;
        result.converged = true;
        return result;
    }

    VectorXd x_prev = x, Xx_prev = Xx, gx_prev = gx;
    VectorXd y = x, Xy = Xx, gy = gx;
    double t = 1.0;
    bool at_restart = true;

    VectorXd z(x.size());
    for (int iter = 1; iter <= max_iter; ++iter) {
        result.iterations = iter;
        const double sy = smooth_value(Xy, target, y, gamma);
        VectorXd Xz;
        double sz;
        for (;;) {
            const VectorXd step = y - gy / L;
            const double thresh = lambda / L;
            for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = soft_threshold(step(j), thresh);
            Xz = X * z;
            sz = smooth_value(Xz, target, z, gamma);
            const VectorXd diff = z - y;
            const double bound = sy + gy.dot(diff) + 0.5 * L * diff.squaredNorm();
            if (!std::isfinite(sz)) fail(ErrorKind::NonFiniteEncountered, "objective diverged");
            if (sz <= bound + 1e-12 * (1.0 + std::abs(sy))) break;
            L *= 2.0;
        }
        const double Fz = sz + lambda * z.lpNorm<1>();

        if (Fz > Fx) {
            // A plain proximal step from x cannot increase F, so after a restart any increase is
            // rounding in F; accept it while within that rounding, otherwise x is a fixed point.
            if (at_restart && Fz > Fx + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(Fx)) break;
        }
        if (Fz > Fx && !at_restart) {
            t = 1.0;
            y = x;
            Xy = Xx;
            gy = gx;
            at_restart = true;
            continue;
        }

        x_prev.swap(x);
        Xx_prev.swap(Xx);
        gx_prev.swap(gx);
        x = z;
        Xx = std::move(Xz);
        gx = gradient(x, Xx);
        Fx = Fz;
        at_restart = false;

        result.optimality = optimality_from_gradient(x, gx, lambda);
        if (result.optimality <= tol) {
            result.converged = true;
            break;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        t = t_next;
        // The smooth gradient is affine in β, so y's image and gradient are extrapolated too.
        y = x + momentum * (x - x_prev);
        Xy = Xx + momentum * (Xx - Xx_prev);
        gy = gx + momentum * (gx - gx_prev);
    }

    if (!result.converged) result.optimality = optimality_from_gradient(x, gx, lambda);
    if (result.optimality <= tol) result.converged = true;
    result.beta = std::move(x);
    result.objective = Fx;
    return result;
}

AdmmSolver::AdmmSolver(const MatrixXd& X, double gamma, double mu)
    : X_(&X), gamma_(gamma), mu_(mu), woodbury_(X.cols() > X.rows()) {
    if (!(mu > 0)) fail(ErrorKind::InvalidArgument, "ADMM penalty mu must be > 0");
    const double c = 2.0 * gamma + mu;
    if (woodbury_) {
        // (cI + 2XᵀX)⁻¹ = (1/c)(I − Xᵀ(c/2·I + XXᵀ)⁻¹X)
        MatrixXd inner = X * X.transpose();
        inner.diagonal().array() += 0.5 * c;
        factor_.compute(inner);
    } else {
        MatrixXd system = 2.0 * X.transpose() * X;
        system.diagonal().array() += c;
        factor_.compute(system);
    }
    if (factor_.info() != Eigen::Success)
        fail(ErrorKind::FactorizationFailure, "ADMM system is not positive definite");
}

VectorXd AdmmSolver::solve_system(const VectorXd& rhs) const {
    const MatrixXd& X = *X_;
    if (!woodbury_) return factor_.solve(rhs);
    const double c = 2.0 * gamma_ + mu_;
    return (rhs - X.transpose() * factor_.solve(X * rhs)) / c;
}

EnetResult AdmmSolver::solve(const VectorXd& target, double lambda, const VectorXd& beta0, double tol,
                             int max_iter) const {
    const MatrixXd& X = *X_;
    check_shapes(X, target, beta0);
    const EnetProblem prob{X, target, gamma_, lambda};

    const VectorXd Xt2 = 2.0 * (X.transpose() * target);
    VectorXd z = beta0;
    VectorXd u = VectorXd::Zero(z.size());
    VectorXd beta(z.size());

    EnetResult result;
    result.beta = beta0;
    result.objective = enet_objective(prob, beta0);
    if (!std::isfinite(result.objective))
        fail(ErrorKind::NonFiniteEncountered, "initial objective is not finite");

    if (Xt2.lpNorm<Eigen::Infinity>() <= lambda) {
        // Zero satisfies the subgradient condition exactly; ADMM would only approach it.
        result.beta = VectorXd::Zero(z.size());
        result.objective = enet_objective(prob, result.beta);
        result.optimality = 0.0;
        result.converged = true;
        return result;
    }

    const double thresh = lambda / mu_;
    for (int iter = 1; iter <= max_iter; ++iter) {
        result.iterations = iter;
        beta = solve_system(Xt2 + mu_ * (z - u));
        VectorXd z_next(z.size());
        for (Eigen::Index j = 0; j < z.size(); ++j) z_next(j) = soft_threshold(beta(j) + u(j), thresh);
        u += beta - z_next;
        const double primal = (beta - z_next).norm();
        const double dual = mu_ * (z_next - z).norm();
        z.swap(z_next);

        const double obj = enet_objective(prob, z);
        if (!std::isfinite(obj)) fail(ErrorKind::NonFiniteEncountered, "ADMM objective diverged");
        if (obj < result.objective) {
            result.objective = obj;
            result.beta = z;
        }
        if (primal <= tol && dual <= tol) {
            result.converged = true;
            break;
        }
    }
    result.optimality = optimality_residual(prob, result.beta);
    return result;
}

EnetResult apg_solve(const EnetProblem& prob, const VectorXd& beta0, double tol, int max_iter) {
    const MatrixXd X = prob.X;
    const ApgSolver solver(X, prob.gamma);
    return solver.solve(prob.target, prob.lambda, beta0, tol, max_iter);
}

EnetResult admm_solve(const EnetProblem& prob, const VectorXd& beta0, double mu, double tol,
                      int max_iter) {
    const MatrixXd X = prob.X;
    const AdmmSolver solver(X, prob.gamma, mu);
    return solver.solve(prob.target, prob.lambda, beta0, tol, max_iter);
}

}  // namespace dfsos
