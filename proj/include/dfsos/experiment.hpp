#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dfsos/classify.hpp"
#include "dfsos/core.hpp"
#include "dfsos/datagen.hpp"
#include "dfsos/dfsos.hpp"

namespace dfsos {

/// A fitted sparse optimal scoring model together with its nearest-centroid rule.
struct TrainedClassifier {
    SosModel model;
    CentroidModel classifier;
    FitTrace trace;
};

/// Dispatches to the deflationary or deflation-free solver.
FitResult fit_method(const Dataset& data, const SolverConfig& cfg, Method method, int q);

/// Fits on `train`, then places class centroids in the learned discriminant space.
TrainedClassifier train_classifier(const Dataset& train, const SolverConfig& cfg, Method method, int q);

struct CvPlan {
    std::vector<double> grid_multipliers;
    int folds = 5;

    /// {2⁻³, …, 2³} × λ_max
    static CvPlan gaussian();
    /// {2⁻⁴, …, 1} × λ_max
    static CvPlan ucr();
    void validate() const;
};

struct CvCell {
    int fold = 0;
    double multiplier = 0.0;
    double lambda = 0.0;
    double accuracy = 0.0;
    bool failed = false;
    std::string error;
};

struct CvResult {
    double best_multiplier = 0.0;
    /// best_multiplier · λ_max on the full training data.
    double best_lambda = 0.0;
    std::vector<double> mean_accuracy;  // per multiplier, NaN when every fold failed
    std::vector<CvCell> cells;          // fold-major
};

/// λ_max on the centred data at the seeded initial scoring matrix; the grid for every method.
double reference_lambda_max(const Dataset& data, const SolverConfig& cfg, int q);

/// Validation-accuracy grid search. Folds are stratified and seeded by cfg.seed;
/// λ_max is recomputed on each training fold. Ties go to the larger multiplier.
CvResult cross_validate(const Dataset& data, const SolverConfig& cfg, const CvPlan& plan, Method method, int q);

/// A benchmark entry: one of the four optimal scoring solvers or a k-NN baseline.
struct BenchMethod {
    std::string name;
    std::optional<Method> sos;
    int knn_k = 0;

    static BenchMethod parse(const std::string& name);
};

/// Source of train/test pairs. Gaussian sources are redrawn per repetition seed;
/// file sources are reused and only the solver seed changes.
struct DataSource {
    std::string name;
    std::optional<GaussianSpec> gaussian;
    Dataset train;
    Dataset test;

    TrainTest draw(unsigned seed) const;
};

/// One (dataset, method, repetition) outcome.
struct RunRecord {
    std::string dataset;
    std::string method;
    int repetition = 0;
    double accuracy = 0.0;
    double runtime_s = 0.0;
    double cardinality = 0.0;  // NaN for baselines without discriminant vectors
    double lambda = 0.0;
    double final_orth_residual = 0.0;  // ‖P − LΘ‖_F at the last iteration; NaN outside DFSOS
    bool ok = true;
    std::string error;
    std::vector<int> predictions;
};

struct Summary {
    double mean = 0.0;
    double variance = 0.0;  // sample variance, 0 for a single value
};

Summary summarize(const std::vector<double>& values);

struct MethodStats {
    std::string method;
    Summary accuracy;
    Summary runtime;
    std::optional<Summary> cardinality;
    int failures = 0;
};

struct DatasetReport {
    std::string name;
    std::vector<MethodStats> methods;
    /// Pairwise integer-encoded prediction cosine averaged over repetitions. The diagonal
    /// averages each method's self-similarity across distinct repetitions (1 with one repetition).
    MatrixXd cosine;
};

struct BenchReport {
    std::vector<DatasetReport> datasets;
    std::vector<RunRecord> records;
};

BenchReport aggregate(std::vector<RunRecord> records, const std::vector<std::string>& method_order);

/// Repetition r uses seed cfg.seed + r for data and solvers. Cell failures are recorded
/// and never abort the run.
BenchReport run_benchmark(const std::vector<DataSource>& datasets, const std::vector<BenchMethod>& methods,
                          const SolverConfig& cfg, const CvPlan& plan, int repetitions);

/// Table layout: method columns, measure rows, cells "mean (variance)" to three decimals.
void write_table(std::ostream& out, const BenchReport& report);
/// key=value lines with full precision.
void write_summary(std::ostream& out, const BenchReport& report);
void write_cosine(std::ostream& out, const BenchReport& report);
void write_records(std::ostream& out, const std::vector<RunRecord>& records);
void write_predictions(std::ostream& out, const std::vector<RunRecord>& records);

/// Inverse of write_records + write_predictions.
std::vector<RunRecord> read_records(std::istream& records, std::istream* predictions);

}  // namespace dfsos
