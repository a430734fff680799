#include <doctest.h>

#include "dfsos/classify.hpp"
#include "test_util.hpp"

using namespace dfsos;
using testutil::gaussian;

TEST_CASE("project") {
    std::mt19937_64 rng(1);
    const MatrixXd X = gaussian(rng, 7, 4);
    const VectorXd means = testutil::gaussian_vec(rng, 4);
    CHECK(project(X, MatrixXd::Zero(4, 2), means).norm() == 0.0);
    MatrixXd first(4, 1);
    first.setZero();
    first(0, 0) = 1.0;
    const MatrixXd s = project(X, first, means);
    for (int i = 0; i < 7; ++i) CHECK(s(i, 0) == X(i, 0) - means(0));

    const MatrixXd B = gaussian(rng, 4, 3);
    const MatrixXd got = project(X, B, means);
    for (int i = 0; i < 7; ++i)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int j = 0; j < 4; ++j) acc += (X(i, j) - means(j)) * B(j, c);
            CHECK(got(i, c) == doctest::Approx(acc).epsilon(1e-13));
        }
    CHECK_THROWS_AS(project(X, MatrixXd::Zero(3, 1), VectorXd::Zero(3)), Error);
}

TEST_CASE("fit_centroids") {
    MatrixXd one(3, 2);
    one << 1, 2, 3, 4, 5, 6;
    CHECK(fit_centroids(one, {1, 2, 3}, 3).centroids == one);
    MatrixXd dup(2, 2);
    dup << 1, 1, 1, 1;
    CHECK(fit_centroids(dup, {1, 1}, 1).centroids == dup.topRows(1));

    std::mt19937_64 rng(2);
    const MatrixXd S = gaussian(rng, 12, 2);
    const auto labels = testutil::random_labels(rng, 12, 3);
    const MatrixXd C = fit_centroids(S, labels, 3).centroids;
    for (int k = 1; k <= 3; ++k) {
        double sx = 0, sy = 0;
        int n = 0;
        for (int i = 0; i < 12; ++i)
            if (labels[static_cast<std::size_t>(i)] == k) {
                sx += S(i, 0);
                sy += S(i, 1);
                ++n;
            }
        CHECK(C(k - 1, 0) == doctest::Approx(sx / n));
        CHECK(C(k - 1, 1) == doctest::Approx(sy / n));
    }
    CHECK_THROWS_AS(fit_centroids(S, std::vector<int>(12, 1), 2), Error);
}

TEST_CASE("nearest centroid") {
    MatrixXd C(2, 1);
    C << -1, 1;
    MatrixXd pts(3, 1);
    pts << -1, 1, 0;
    const auto pred = nearest_centroid(pts, C);
    CHECK(pred == std::vector<int>{1, 2, 1});

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd S = gaussian(rng, 30, 3);
        const MatrixXd Cs = gaussian(rng, 4, 3);
        const auto got = nearest_centroid(S, Cs);
        for (int i = 0; i < 30; ++i) {
            int best = 0;
            double bd = 1e300;
            for (int k = 0; k < 4; ++k) {
                double dist = 0;
                for (int j = 0; j < 3; ++j) dist += (S(i, j) - Cs(k, j)) * (S(i, j) - Cs(k, j));
                if (dist < bd) {
                    bd = dist;
                    best = k;
                }
            }
            CHECK(got[static_cast<std::size_t>(i)] == best + 1);
        }
    }
}

TEST_CASE("nearest centroid is unchanged by a shared rotation") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd S = gaussian(rng, 50, 3);
        const MatrixXd C = gaussian(rng, 4, 3);
        const MatrixXd R = testutil::haar_orthonormal(rng, 3, 3);
        CHECK(nearest_centroid(S, C) == nearest_centroid(S * R, C * R));
    }
}

TEST_CASE("k nearest neighbours") {
    MatrixXd Xtr(4, 1);
    Xtr << 0, 1, 10, 11;
    const std::vector<int> labels{1, 1, 2, 2};
    MatrixXd Xte(2, 1);
    Xte << 10, 0.2;
    CHECK(knn_predict(Xtr, labels, Xte, 1) == std::vector<int>{2, 1});
    CHECK(knn_predict(Xtr, labels, Xte, 4) == std::vector<int>{1, 1});

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd A = gaussian(rng, 20, 2);
        const auto lab = testutil::random_labels(rng, 20, 3);
        const MatrixXd T = gaussian(rng, 8, 2);
        const auto got = knn_predict(A, lab, T, 5);
        for (int t = 0; t < 8; ++t) {
            std::vector<std::pair<double, int>> dist;
            for (int i = 0; i < 20; ++i) dist.push_back({(A.row(i) - T.row(t)).squaredNorm(), i});
            std::sort(dist.begin(), dist.end());
            std::vector<int> votes(3, 0);
            for (int m = 0; m < 5; ++m) ++votes[static_cast<std::size_t>(lab[static_cast<std::size_t>(dist[static_cast<std::size_t>(m)].second)] - 1)];
            int best = 0;
            for (int k = 1; k < 3; ++k)
                if (votes[static_cast<std::size_t>(k)] > votes[static_cast<std::size_t>(best)]) best = k;
            CHECK(got[static_cast<std::size_t>(t)] == best + 1);
        }
    }
    CHECK_THROWS_AS(knn_predict(Xtr, labels, Xte, 5), Error);
}

TEST_CASE("metrics") {
    const std::vector<int> truth{1, 2, 3, 1};
    CHECK(metrics(truth, truth, MatrixXd::Ones(3, 1)).accuracy == 1.0);
    CHECK(metrics({1, 1, 1, 1}, truth, MatrixXd::Zero(5, 2)).cardinality == 0.0);
    CHECK(metrics({1, 1, 1, 1}, truth, MatrixXd::Zero(5, 2)).accuracy == 0.5);
    MatrixXd B = MatrixXd::Zero(1000, 2);
    for (int j = 0; j < 119; ++j) B(j * 8, j % 2) = 1.0;
    CHECK(metrics(truth, truth, B).cardinality == doctest::Approx(0.119));
    CHECK(metrics(truth, truth, B).entry_density == doctest::Approx(0.0595));
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), Error);
}

TEST_CASE("prediction cosine") {
    CHECK(prediction_cosine({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(prediction_cosine({1, 1}, {2, 2}) == doctest::Approx(1.0));
    CHECK(prediction_cosine({1, 2, 3}, {3, 2, 1}) == doctest::Approx(10.0 / 14.0));
    CHECK(prediction_cosine_onehot({1, 1}, {2, 2}) == 0.0);
    CHECK(prediction_cosine_onehot({1, 2, 3, 1}, {1, 2, 1, 1}) == 0.75);
    CHECK_THROWS_AS(prediction_cosine({0, 0}, {1, 1}), Error);
    CHECK_THROWS_AS(prediction_cosine({1}, {1, 1}), Error);
}
