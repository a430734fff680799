#include "dfsos/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dfsos {

MatrixXd project(const MatrixXd& X, const MatrixXd& Beta, const VectorXd& column_means) {
    if (X.cols() != Beta.rows() || Beta.rows() != column_means.size())
        fail(ErrorKind::ShapeMismatch, "data has " + std::to_string(X.cols()) + " features, model has " +
                                           std::to_string(Beta.rows()));
    return apply_centering(X, column_means) * Beta;
}

CentroidModel fit_centroids(const MatrixXd& scores, const std::vector<int>& labels, int K) {
    if (static_cast<Eigen::Index>(labels.size()) != scores.rows())
        fail(ErrorKind::ShapeMismatch, "label count differs from score rows");
    CentroidModel model;
    model.centroids = MatrixXd::Zero(K, scores.cols());
    std::vector<int> counts(K, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int label = labels[i];
        if (label < 1 || label > K) fail(ErrorKind::LabelOutOfRange, "label outside 1..K");
        model.centroids.row(label - 1) += scores.row(static_cast<Eigen::Index>(i));
        ++counts[label - 1];
    }
    for (int k = 0; k < K; ++k) {
        if (counts[k] == 0) fail(ErrorKind::EmptyClass, "class " + std::to_string(k + 1) + " has no members");
        model.centroids.row(k) /= counts[k];
    }
    return model;
}

std::vector<int> nearest_centroid(const MatrixXd& scores, const MatrixXd& centroids) {
    if (scores.cols() != centroids.cols())
        fail(ErrorKind::ShapeMismatch, "score and centroid dimensions differ");
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        double best_dist = (scores.row(i) - centroids.row(0)).squaredNorm();
        for (Eigen::Index k = 1; k < centroids.rows(); ++k) {
            const double dist = (scores.row(i) - centroids.row(k)).squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(k);
            }
        }
        out[static_cast<std::size_t>(i)] = best + 1;
    }
    return out;
}

std::vector<int> predict_nearest_centroid(const CentroidModel& model, const MatrixXd& X_test) {
    return nearest_centroid(project(X_test, model.Beta, model.column_means), model.centroids);
}

std::vector<int> knn_predict(const MatrixXd& X_train, const std::vector<int>& labels, const MatrixXd& X_test,
                             int k) {
    const auto n = static_cast<int>(X_train.rows());
    if (static_cast<int>(labels.size()) != n) fail(ErrorKind::ShapeMismatch, "label count differs from rows");
    if (X_test.cols() != X_train.cols()) fail(ErrorKind::ShapeMismatch, "feature counts differ");
    if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "k must lie in 1..n_train");
    const int K = *std::max_element(labels.begin(), labels.end());

    std::vector<int> out(static_cast<std::size_t>(X_test.rows()));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<double> dist(static_cast<std::size_t>(n));
    std::vector<int> votes(static_cast<std::size_t>(K));
    for (Eigen::Index t = 0; t < X_test.rows(); ++t) {
        for (int i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = (X_train.row(i) - X_test.row(t)).squaredNorm();
        std::iota(order.begin(), order.end(), 0);
        // Equal distances resolve by training index.
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            const double da = dist[static_cast<std::size_t>(a)], db = dist[static_cast<std::size_t>(b)];
            return da < db || (da == db && a < b);
        });
        std::fill(votes.begin(), votes.end(), 0);
        for (int m = 0; m < k; ++m) ++votes[static_cast<std::size_t>(labels[static_cast<std::size_t>(order[m])] - 1)];
        const auto winner = std::max_element(votes.begin(), votes.end());  // first maximum = smallest class
        out[static_cast<std::size_t>(t)] = static_cast<int>(winner - votes.begin()) + 1;
    }
    return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) fail(ErrorKind::ShapeMismatch, "prediction and truth lengths differ");
    if (pred.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Metrics metrics(const std::vector<int>& pred, const std::vector<int>& truth, const MatrixXd& Beta) {
    Metrics m;
    m.accuracy = accuracy(pred, truth);
    if (Beta.rows() > 0) m.cardinality = static_cast<double>(nonzero_rows(Beta)) / static_cast<double>(Beta.rows());
    if (Beta.size() > 0)
        m.entry_density = static_cast<double>((Beta.array() != 0.0).count()) / static_cast<double>(Beta.size());
    return m;
}

double prediction_cosine(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) fail(ErrorKind::ShapeMismatch, "prediction vectors differ in length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) fail(ErrorKind::ZeroVector, "cosine of a zero prediction vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double prediction_cosine_onehot(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) fail(ErrorKind::ShapeMismatch, "prediction vectors differ in length");
    if (a.empty()) fail(ErrorKind::ZeroVector, "cosine of empty prediction vectors");
    // Each one-hot row has unit norm, so ‖a‖ = ‖b‖ = √n and ⟨a,b⟩ counts agreements.
    return accuracy(a, b);
}

}  // namespace dfsos
