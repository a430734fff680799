#include <doctest.h>

#include "dfsos/core.hpp"
#include "dfsos/dfsos.hpp"
#include "test_util.hpp"

using namespace dfsos;
using testutil::gaussian;

namespace {

// Term-by-term objective with explicit loops.
double objective_loops(const MatrixXd& X, const MatrixXd& Y, const MatrixXd& Theta, const MatrixXd& Beta,
                       double gamma, double lambda) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < Theta.cols(); ++c) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            double yt = 0.0, xb = 0.0;
            for (Eigen::Index k = 0; k < Y.cols(); ++k) yt += Y(i, k) * Theta(k, c);
            for (Eigen::Index j = 0; j < X.cols(); ++j) xb += X(i, j) * Beta(j, c);
            total += (yt - xb) * (yt - xb);
        }
        for (Eigen::Index j = 0; j < Beta.rows(); ++j)
            total += gamma * Beta(j, c) * Beta(j, c) + lambda * std::abs(Beta(j, c));
    }
    return total;
}

}  // namespace

TEST_CASE("build_indicator on small label vectors") {
    const auto a = build_indicator({1, 2, 2}, 2);
    MatrixXd Y(3, 2);
    Y << 1, 0, 0, 1, 0, 1;
    CHECK(a.Y == Y);
    CHECK(a.class_counts(0) == 1);
    CHECK(a.class_counts(1) == 2);
    CHECK(a.d(0) == doctest::Approx(1.0 / 3.0));
    CHECK(a.d(1) == doctest::Approx(2.0 / 3.0));

    const auto b = build_indicator({1, 1, 1}, 1);
    CHECK(b.Y == MatrixXd::Ones(3, 1));
    CHECK(b.d(0) == 1.0);

    const auto c = build_indicator({3, 1, 2, 3}, 3);
    CHECK(c.d(0) == 0.25);
    CHECK(c.d(1) == 0.25);
    CHECK(c.d(2) == 0.5);
}

TEST_CASE("build_indicator matches a tally on random labels") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = testutil::uniform_int(rng, 1, 6);
        const int n = testutil::uniform_int(rng, K, 40);
        const auto labels = testutil::random_labels(rng, n, K);
        const auto ind = build_indicator(labels, K);
        for (int k = 0; k < K; ++k) {
            int tally = 0;
            for (int l : labels) tally += l == k + 1;
            CHECK(ind.class_counts(k) == tally);
            CHECK(ind.d(k) == doctest::Approx(static_cast<double>(tally) / n));
        }
        CHECK((ind.Y.transpose() * ind.Y / n - MatrixXd(ind.D())).norm() < 1e-14);
        CHECK((ind.Y.rowwise().sum().array() == 1.0).all());
        const VectorXd v = testutil::gaussian_vec(rng, n);
        CHECK((ind.class_sums(v) - ind.Y.transpose() * v).norm() < 1e-12);
        const VectorXd t = testutil::gaussian_vec(rng, K);
        CHECK((ind.expand(t) - ind.Y * t).norm() < 1e-12);
    }
}

TEST_CASE("build_indicator errors") {
    auto kind_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;
    };
    CHECK(kind_of([] { build_indicator({1, 3}, 2); }) == ErrorKind::LabelOutOfRange);
    CHECK(kind_of([] { build_indicator({0, 1}, 2); }) == ErrorKind::LabelOutOfRange);
    CHECK(kind_of([] { build_indicator({1, 1, 3}, 3); }) == ErrorKind::EmptyClass);
}

TEST_CASE("sos_objective") {
    SUBCASE("zero coefficients at a feasible scoring matrix give n·q") {
        std::mt19937_64 rng(3);
        const auto labels = testutil::random_labels(rng, 12, 3);
        const auto ind = build_indicator(labels, 3);
        const MatrixXd Theta = init_theta(3, 2, ind.d, 5);
        const MatrixXd X = gaussian(rng, 12, 4);
        CHECK(sos_objective(X, ind.Y, Theta, MatrixXd::Zero(4, 2), 0.1, 0.3) == doctest::Approx(24.0));
    }
    SUBCASE("all zero") {
        CHECK(sos_objective(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1),
                            0.1, 1.0) == 0.0);
    }
    SUBCASE("matches the scalar-loop oracle") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 10; ++trial) {
            const MatrixXd X = gaussian(rng, 6, 4);
            const auto ind = build_indicator(testutil::random_labels(rng, 6, 3), 3);
            const MatrixXd Theta = gaussian(rng, 3, 2);
            const MatrixXd Beta = gaussian(rng, 4, 2);
            const double expected = objective_loops(X, ind.Y, Theta, Beta, 0.7, 0.4);
            CHECK(sos_objective(X, ind.Y, Theta, Beta, 0.7, 0.4) == doctest::Approx(expected).epsilon(1e-13));
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(sos_objective(MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 1),
                                      MatrixXd::Zero(3, 1), 0.1, 1.0),
                        Error);
    }
}

TEST_CASE("center_columns") {
    MatrixXd X(2, 1);
    X << 1, 3;
    const auto c = center_columns(X);
    CHECK(c.X(0, 0) == -1.0);
    CHECK(c.X(1, 0) == 1.0);
    CHECK(c.means(0) == 2.0);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd R = gaussian(rng, 5, 3);
        const auto once = center_columns(R);
        for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(once.X.col(j).sum()) < 1e-12);
        const auto twice = center_columns(once.X);
        CHECK((twice.X - once.X).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((apply_centering(R, once.means) - once.X).norm() == 0.0);
    }
    CHECK_THROWS_AS(apply_centering(MatrixXd::Zero(2, 3), VectorXd::Zero(2)), Error);
}

TEST_CASE("nonzero_rows and orthogonality error") {
    MatrixXd B = MatrixXd::Zero(4, 2);
    B(1, 0) = 1e-300;
    B(3, 1) = -2.0;
    CHECK(nonzero_rows(B) == 2);

    SosModel m;
    m.Theta = MatrixXd::Identity(2, 2);
    CHECK(m.orthogonality_error(VectorXd::Ones(2)) == 0.0);
    CHECK(m.orthogonality_error(VectorXd::Constant(2, 4.0)) == doctest::Approx(std::sqrt(18.0)));
}

TEST_CASE("method names and config validation") {
    for (Method m : {Method::DeflationAPG, Method::DeflationADMM, Method::DfsosV1, Method::DfsosV2})
        CHECK(parse_method(to_string(m)) == m);
    CHECK(parse_method("deflation-apg") == Method::DeflationAPG);
    CHECK(parse_method("dfsos-2") == Method::DfsosV2);
    CHECK_THROWS_AS(parse_method("svm"), Error);
    CHECK(is_dfsos(Method::DfsosV1));
    CHECK_FALSE(is_dfsos(Method::DeflationADMM));

    SolverConfig cfg = gaussian_profile();
    CHECK(cfg.gamma == 0.1);
    CHECK(cfg.rho0 == 5.0);
    CHECK(cfg.eta == 0.25);
    CHECK(cfg.sigma == 2.0);
    CHECK(cfg.mu_admm == 2.0);
    CHECK(cfg.max_outer == 500);
    CHECK(ucr_profile().max_outer == 50);
    CHECK(ucr_profile().tol_inner_beta == 1e-5);
    cfg.validate();
    cfg.eta = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = gaussian_profile();
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = gaussian_profile();
    cfg.lambda_scale = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("error grouping") {
    CHECK(classify_error(ErrorKind::InvalidArgument) == ErrorClass::Usage);
    CHECK(classify_error(ErrorKind::SpecInvalid) == ErrorClass::Usage);
    CHECK(classify_error(ErrorKind::ShapeMismatch) == ErrorClass::Data);
    CHECK(classify_error(ErrorKind::IoError) == ErrorClass::Data);
    CHECK(classify_error(ErrorKind::RankCollapse) == ErrorClass::Numerical);
    const Error e(ErrorKind::RaggedRows, "line 3");
    CHECK(std::string(e.what()) == "RaggedRows: line 3");
}

TEST_CASE("dataset validation") {
    Dataset d;
    d.K = 2;
    d.X = MatrixXd::Zero(3, 2);
    d.labels = {1, 2, 1};
    d.validate();
    d.labels = {1, 1, 1};
    CHECK_THROWS_AS(d.validate(), Error);
    d.validate(false);
    d.X(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(d.validate(false), Error);
}
