#include "dfsos/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

namespace dfsos {

void GaussianSpec::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorKind::SpecInvalid, what);
    };
    require(K >= 2, "K must be at least 2");
    require(p >= 1 && block >= 1, "p and block must be positive");
    require(static_cast<long>(K) * block <= p, "K·block must not exceed p");
    require(r >= 0.0 && r < 1.0, "r must lie in [0, 1)");
    require(std::isfinite(mean_value), "mean value must be finite");
    require(n_train_per_class >= 1 && n_test_per_class >= 1, "per-class sample sizes must be positive");
}

namespace {

Dataset sample_classes(const GaussianSpec& spec, int per_class, unsigned stream) {
    Dataset data;
    data.K = spec.K;
    const int n = per_class * spec.K;
    data.X.resize(n, spec.p);
    data.labels.resize(static_cast<std::size_t>(n));
    const double a = std::sqrt(1.0 - spec.r);
    const double b = std::sqrt(spec.r);
    for (int k = 0; k < spec.K; ++k) {
        std::seed_seq seq{spec.seed, static_cast<unsigned>(k), stream};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        for (int i = 0; i < per_class; ++i) {
            const int row = k * per_class + i;
            const double g = normal(rng);
            for (int j = 0; j < spec.p; ++j) {
                const bool in_block = j >= k * spec.block && j < (k + 1) * spec.block;
                data.X(row, j) = (in_block ? spec.mean_value : 0.0) + a * normal(rng) + b * g;
            }
            data.labels[static_cast<std::size_t>(row)] = k + 1;
        }
    }
    return data;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

TrainTest generate_gaussians(const GaussianSpec& spec) {
    spec.validate();
    TrainTest out{sample_classes(spec, spec.n_train_per_class, 0u), sample_classes(spec, spec.n_test_per_class, 1u)};
    return out;
}

int LabelMap::index_of(double value) const {
    const auto it = std::lower_bound(values.begin(), values.end(), value);
    if (it == values.end() || *it != value) return 0;
    return static_cast<int>(it - values.begin()) + 1;
}

Dataset parse_delimited(const std::string& text, DelimitedFormat format, const std::optional<LabelMap>& mapping,
                        std::optional<int> K_hint) {
    const char sep = format == DelimitedFormat::LabelFirstTSV ? '\t' : ',';
    std::vector<double> raw_labels;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line, sep);
        if (rows.empty())
            width = fields.size();
        else if (fields.size() != width)
            fail(ErrorKind::RaggedRows, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                            " fields, expected " + std::to_string(width));
        if (fields.size() < 2)
            fail(ErrorKind::RaggedRows, "line " + std::to_string(line_no) + " needs a label and at least one feature");
        std::vector<double> values(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            if (!parse_double(fields[c], values[c]))
                fail(ErrorKind::NonNumericField,
                     "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1));
        if (format == DelimitedFormat::LabelFirstTSV) {
            raw_labels.push_back(values.front());
            values.erase(values.begin());
        } else {
            raw_labels.push_back(values.back());
            values.pop_back();
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) fail(ErrorKind::IoError, "no observations found");

    LabelMap map;
    if (mapping) {
        map = *mapping;
    } else {
        map.values = raw_labels;
        std::sort(map.values.begin(), map.values.end());
        map.values.erase(std::unique(map.values.begin(), map.values.end()), map.values.end());
    }
    if (K_hint && *K_hint != static_cast<int>(map.values.size()))
        fail(ErrorKind::LabelOutOfRange, "expected " + std::to_string(*K_hint) + " classes, found " +
                                             std::to_string(map.values.size()));

    Dataset data;
    data.K = static_cast<int>(map.values.size());
    data.class_values = map.values;
    data.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
    data.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int index = map.index_of(raw_labels[i]);
        if (index == 0) fail(ErrorKind::UnknownLabel, "label " + format_number(raw_labels[i]) + " not seen in training data");
        data.labels[i] = index;
        for (std::size_t j = 0; j + 1 < width; ++j)
            data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    data.validate(!mapping.has_value());
    return data;
}

Dataset load_delimited(const std::string& path, DelimitedFormat format, const std::optional<LabelMap>& mapping,
                       std::optional<int> K_hint) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::IoError, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_delimited(buffer.str(), format, mapping, K_hint);
}

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string format_precise(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string format_delimited(const Dataset& data, DelimitedFormat format) {
    const char sep = format == DelimitedFormat::LabelFirstTSV ? '\t' : ',';
    std::string out;
    for (int i = 0; i < data.n(); ++i) {
        const int label = data.labels[static_cast<std::size_t>(i)];
        const std::string label_text =
            data.class_values.empty() ? std::to_string(label) : format_number(data.class_values[static_cast<std::size_t>(label - 1)]);
        if (format == DelimitedFormat::LabelFirstTSV) out += label_text;
        for (int j = 0; j < data.p(); ++j) {
            if (format == DelimitedFormat::LabelFirstTSV || j > 0) out += sep;
            out += format_precise(data.X(i, j));
        }
        if (format == DelimitedFormat::LabelLastCSV) {
            out += sep;
            out += label_text;
        }
        out += '\n';
    }
    return out;
}

void save_delimited(const Dataset& data, const std::string& path, DelimitedFormat format) {
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::IoError, "cannot write '" + path + "'");
    file << format_delimited(data, format);
    if (!file) fail(ErrorKind::IoError, "write to '" + path + "' failed");
}

std::vector<Fold> kfold_split(const std::vector<int>& labels, int folds, unsigned seed) {
    if (folds < 2) fail(ErrorKind::InvalidArgument, "at least two folds are required");
    if (static_cast<std::size_t>(folds) > labels.size())
        fail(ErrorKind::TooFewSamples, "more folds than observations");
    std::map<int, std::vector<int>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
    for (const auto& [label, members] : by_class)
        if (static_cast<int>(members.size()) < folds)
            fail(ErrorKind::TooFewSamples, "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                               " members, fewer than " + std::to_string(folds) + " folds");

    std::mt19937_64 rng(seed);
    std::vector<int> assignment(labels.size());
    int slot = 0;
    for (auto& [label, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (int idx : members) assignment[static_cast<std::size_t>(idx)] = slot++ % folds;
    }
    std::vector<Fold> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (int f = 0; f < folds; ++f) {
            auto& fold = out[static_cast<std::size_t>(f)];
            (assignment[i] == f ? fold.validation : fold.train).push_back(static_cast<int>(i));
        }
    return out;
}

Dataset subset(const Dataset& data, const std::vector<int>& rows) {
    Dataset out;
    out.K = data.K;
    out.feature_names = data.feature_names;
    out.class_values = data.class_values;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
        out.labels[i] = data.labels[static_cast<std::size_t>(rows[i])];
    }
    return out;
}

}  // namespace dfsos
