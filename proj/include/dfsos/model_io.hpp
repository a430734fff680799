#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dfsos/classify.hpp"
#include "dfsos/core.hpp"

namespace dfsos {

/// Everything needed to classify new data: the fitted pair (Θ, B), the training
/// centring (and optional scaling), the centroids and the original label values.
struct ModelFile {
    SosModel model;
    int K = 0;
    int p = 0;
    unsigned seed = 0;
    int iterations = 0;
    bool not_converged = false;
    VectorXd column_means;
    std::optional<VectorXd> column_scales;
    std::vector<double> class_values;
    MatrixXd centroids;

    CentroidModel classifier() const;
    /// Applies the stored scaling (if any) so that the centroid rule sees training units.
    MatrixXd prepare(const MatrixXd& X) const;
};

/// Header lines `key=value`, then `[Theta]`, `[Beta]` and `[Centroids]` CSV blocks.
void write_model(std::ostream& out, const ModelFile& file);
ModelFile read_model(std::istream& in);
void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

/// CSV with columns iteration,column,objective,orth_residual,rho.
void write_trace(std::ostream& out, const FitTrace& trace);

}  // namespace dfsos
