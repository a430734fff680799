#pragma once

#include <vector>

#include "dfsos/core.hpp"

namespace dfsos {

struct CentroidModel {
    MatrixXd centroids;     // K×q, class means in discriminant space
    MatrixXd Beta;          // p×q
    VectorXd column_means;  // p, training means removed before projecting
};

/// (X − 1·meansᵀ)·Beta
MatrixXd project(const MatrixXd& X, const MatrixXd& Beta, const VectorXd& column_means);

CentroidModel fit_centroids(const MatrixXd& scores, const std::vector<int>& labels, int K);

/// Nearest centroid by Euclidean distance; ties go to the smaller class index.
std::vector<int> nearest_centroid(const MatrixXd& scores, const MatrixXd& centroids);

std::vector<int> predict_nearest_centroid(const CentroidModel& model, const MatrixXd& X_test);

/// Majority vote among the k nearest training rows; ties go to the smallest tied class.
std::vector<int> knn_predict(const MatrixXd& X_train, const std::vector<int>& labels, const MatrixXd& X_test,
                             int k);

struct Metrics {
    double accuracy = 0.0;
    double cardinality = 0.0;    // fraction of features with a nonzero row in Beta
    double entry_density = 0.0;  // nonzero entries / (p·q)
};

Metrics metrics(const std::vector<int>& pred, const std::vector<int>& truth, const MatrixXd& Beta);

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

/// Cosine of the integer-encoded label vectors.
double prediction_cosine(const std::vector<int>& a, const std::vector<int>& b);

/// Cosine of the stacked one-hot encodings, i.e. the agreement fraction. Unlike the
/// integer encoding this does not depend on label order.
double prediction_cosine_onehot(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace dfsos
