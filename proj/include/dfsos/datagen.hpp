#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dfsos/core.hpp"

namespace dfsos {

/// K Gaussian classes in p dimensions. Class i has mean `mean_value` on features
/// block·(i−1)+1 .. block·i and 0 elsewhere; all classes share Σ = (1−r)I + r·11ᵀ.
struct GaussianSpec {
    int K = 3;
    double r = 0.1;
    int p = 1000;
    int block = 100;
    double mean_value = 0.7;
    int n_train_per_class = 100;
    int n_test_per_class = 1000;
    unsigned seed = 0;

    void validate() const;
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

/// Draws x = μ + √(1−r)·z + √r·g·1 with z ~ N(0, I_p), g ~ N(0, 1), which has
/// covariance exactly (1−r)I + r·11ᵀ. Rows are grouped by class.
TrainTest generate_gaussians(const GaussianSpec& spec);

enum class DelimitedFormat { LabelFirstTSV, LabelLastCSV };

/// Label value ↔ class index mapping, sorted by value.
struct LabelMap {
    std::vector<double> values;

    int index_of(double value) const;  // 1-based, 0 when absent
};

/// Reads one observation per line. Labels are remapped to 1..K in sorted order of
/// their values, or through `mapping` (test data) where unseen labels are an error.
Dataset load_delimited(const std::string& path, DelimitedFormat format,
                       const std::optional<LabelMap>& mapping = std::nullopt,
                       std::optional<int> K_hint = std::nullopt);

/// Parses the same layout from an in-memory buffer.
Dataset parse_delimited(const std::string& text, DelimitedFormat format,
                        const std::optional<LabelMap>& mapping = std::nullopt,
                        std::optional<int> K_hint = std::nullopt);

/// Writes with 17 significant digits; labels use class_values when present.
void save_delimited(const Dataset& data, const std::string& path, DelimitedFormat format);
std::string format_delimited(const Dataset& data, DelimitedFormat format);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);
/// Fixed 17-significant-digit text.
std::string format_precise(double value);

struct Fold {
    std::vector<int> train;
    std::vector<int> validation;
};

/// Stratified k-fold split of 0-based indices. Each class is shuffled with the seed
/// and dealt round-robin across folds.
std::vector<Fold> kfold_split(const std::vector<int>& labels, int folds, unsigned seed);

Dataset subset(const Dataset& data, const std::vector<int>& rows);

}  // namespace dfsos
