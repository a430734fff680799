#include "dfsos/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dfsos/deflation.hpp"
#include "dfsos/parallel.hpp"

namespace dfsos {

FitResult fit_method(const Dataset& data, const SolverConfig& cfg, Method method, int q) {
    switch (method) {
        case Method::DeflationAPG: return fit_deflation(data, cfg, q, BetaSolver::APG);
        case Method::DeflationADMM: return fit_deflation(data, cfg, q, BetaSolver::ADMM);
        case Method::DfsosV1: return fit_dfsos(data, cfg, q, SplitKind::V1);
        case Method::DfsosV2: return fit_dfsos(data, cfg, q, SplitKind::V2);
    }
    fail(ErrorKind::InvalidArgument, "unknown method");
}

TrainedClassifier train_classifier(const Dataset& train, const SolverConfig& cfg, Method method, int q) {
    FitResult fit = fit_method(train, cfg, method, q);
    TrainedClassifier out;
    const VectorXd means = center_columns(train.X).means;
    out.classifier = fit_centroids(project(train.X, fit.model.Beta, means), train.labels, train.K);
    out.classifier.Beta = fit.model.Beta;
    out.classifier.column_means = means;
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
    return out;
}

CvPlan CvPlan::gaussian() { return {{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, 5}; }

CvPlan CvPlan::ucr() { return {{0.0625, 0.125, 0.25, 0.5, 1.0}, 5}; }

void CvPlan::validate() const {
    if (grid_multipliers.empty()) fail(ErrorKind::InvalidArgument, "λ grid is empty");
    for (std::size_t i = 0; i < grid_multipliers.size(); ++i) {
        if (!(grid_multipliers[i] > 0)) fail(ErrorKind::InvalidArgument, "λ multipliers must be positive");
        if (i > 0 && !(grid_multipliers[i] > grid_multipliers[i - 1]))
            fail(ErrorKind::InvalidArgument, "λ multipliers must be sorted ascending");
    }
    if (folds < 2) fail(ErrorKind::InvalidArgument, "at least two folds are required");
}

double reference_lambda_max(const Dataset& data, const SolverConfig& cfg, int q) {
    const MatrixXd X = center_columns(data.X).X;
    const IndicatorMatrix ind = build_indicator(data.labels, data.K);
    return lambda_max(X, ind, init_theta(data.K, q, ind.d, cfg.seed), cfg.gamma).value;
}

CvResult cross_validate(const Dataset& data, const SolverConfig& cfg, const CvPlan& plan, Method method, int q) {
    plan.validate();
    cfg.validate();
    data.validate();
    const auto folds = kfold_split(data.labels, plan.folds, cfg.seed);
    const std::size_t n_mult = plan.grid_multipliers.size();

    CvResult out;
    out.cells.resize(folds.size() * n_mult);
    parallel_for(out.cells.size(), [&](std::size_t cell_index) {
        const std::size_t f = cell_index / n_mult;
        const std::size_t m = cell_index % n_mult;
        CvCell& cell = out.cells[cell_index];
        cell.fold = static_cast<int>(f);
        cell.multiplier = plan.grid_multipliers[m];
        try {
            const Dataset train = subset(data, folds[f].train);
            const Dataset val = subset(data, folds[f].validation);
            SolverConfig fold_cfg = cfg;
            fold_cfg.lambda_scale = cell.multiplier;
            const TrainedClassifier fitted = train_classifier(train, fold_cfg, method, q);
            cell.lambda = fitted.model.lambda;
            cell.accuracy = accuracy(predict_nearest_centroid(fitted.classifier, val.X), val.labels);
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });

    out.mean_accuracy.assign(n_mult, std::numeric_limits<double>::quiet_NaN());
    int best = -1;
    for (std::size_t m = 0; m < n_mult; ++m) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const CvCell& cell = out.cells[f * n_mult + m];
            if (cell.failed) continue;
            sum += cell.accuracy;
            ++count;
        }
        if (count == 0) continue;
        out.mean_accuracy[m] = sum / count;
        // ≥ so that ties move to the larger λ.
        if (best < 0 || out.mean_accuracy[m] >= out.mean_accuracy[static_cast<std::size_t>(best)])
            best = static_cast<int>(m);
    }
    if (best < 0) fail(ErrorKind::AllCellsFailed, "every cross-validation cell failed");
    out.best_multiplier = plan.grid_multipliers[static_cast<std::size_t>(best)];
    out.best_lambda = out.best_multiplier * reference_lambda_max(data, cfg, q);
    return out;
}

BenchMethod BenchMethod::parse(const std::string& name) {
    BenchMethod m;
    m.name = name;
    if (name.rfind("knn", 0) == 0) {
        try {
            m.knn_k = std::stoi(name.substr(3));
        } catch (...) {
            fail(ErrorKind::InvalidArgument, "k-NN method must look like knn5");
        }
        if (m.knn_k < 1) fail(ErrorKind::InvalidArgument, "k-NN needs k >= 1");
        return m;
    }
    m.sos = parse_method(name);
    m.name = std::string(to_string(*m.sos));
    return m;
}

TrainTest DataSource::draw(unsigned seed) const {
    if (gaussian) {
        GaussianSpec spec = *gaussian;
        spec.seed = seed;
        return generate_gaussians(spec);
    }
    return {train, test};
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) {
        s.mean = s.variance = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        for (double v : values) s.variance += (v - s.mean) * (v - s.mean);
        s.variance /= static_cast<double>(values.size() - 1);
    }
    return s;
}

BenchReport aggregate(std::vector<RunRecord> records, const std::vector<std::string>& method_order) {
    BenchReport report;
    std::vector<std::string> dataset_order;
    for (const auto& r : records)
        if (std::find(dataset_order.begin(), dataset_order.end(), r.dataset) == dataset_order.end())
            dataset_order.push_back(r.dataset);
    std::vector<std::string> methods = method_order;
    for (const auto& r : records)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);

    for (const auto& name : dataset_order) {
        DatasetReport ds;
        ds.name = name;
        // method -> repetition -> record
        std::vector<std::map<int, const RunRecord*>> by_method(methods.size());
        for (const auto& r : records) {
            if (r.dataset != name) continue;
            const auto mi = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), r.method) - methods.begin());
            by_method[mi][r.repetition] = &r;
        }
        std::vector<std::size_t> present;
        for (std::size_t mi = 0; mi < methods.size(); ++mi)
            if (!by_method[mi].empty()) present.push_back(mi);

        for (std::size_t mi : present) {
            MethodStats stats;
            stats.method = methods[mi];
            std::vector<double> acc, time, card;
            for (const auto& [rep, rec] : by_method[mi]) {
                if (!rec->ok) {
                    ++stats.failures;
                    continue;
                }
                acc.push_back(rec->accuracy);
                time.push_back(rec->runtime_s);
                if (!std::isnan(rec->cardinality)) card.push_back(rec->cardinality);
            }
            stats.accuracy = summarize(acc);
            stats.runtime = summarize(time);
            if (!card.empty()) stats.cardinality = summarize(card);
            ds.methods.push_back(stats);
        }

        const auto m = static_cast<Eigen::Index>(present.size());
        ds.cosine = MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = a; b < m; ++b) {
                const auto& ra = by_method[present[static_cast<std::size_t>(a)]];
                const auto& rb = by_method[present[static_cast<std::size_t>(b)]];
                double sum = 0.0;
                int count = 0;
                for (const auto& [rep_a, rec_a] : ra) {
                    if (!rec_a->ok) continue;
                    for (const auto& [rep_b, rec_b] : rb) {
                        if (!rec_b->ok) continue;
                        const bool pair = a == b ? rep_a < rep_b : rep_a == rep_b;
                        if (!pair || rec_a->predictions.size() != rec_b->predictions.size() ||
                            rec_a->predictions.empty())
                            continue;
                        sum += prediction_cosine(rec_a->predictions, rec_b->predictions);
                        ++count;
                    }
                }
                double value = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
                if (a == b && count == 0) {
                    int ok = 0;
                    for (const auto& [rep, rec] : ra) ok += rec->ok;
                    if (ok == 1) value = 1.0;
                }
                ds.cosine(a, b) = ds.cosine(b, a) = value;
            }
        }
        report.datasets.push_back(std::move(ds));
    }
    report.records = std::move(records);
    return report;
}

namespace {

RunRecord evaluate_method(const BenchMethod& method, const TrainTest& data, const SolverConfig& cfg,
                          const CvPlan& plan) {
    RunRecord rec;
    rec.method = method.name;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (method.sos) {
            const int q = data.train.K - 1;
            const CvResult cv = cross_validate(data.train, cfg, plan, *method.sos, q);
            SolverConfig final_cfg = cfg;
            final_cfg.lambda_scale.reset();
            final_cfg.lambda = cv.best_lambda;
            const TrainedClassifier fitted = train_classifier(data.train, final_cfg, *method.sos, q);
            rec.predictions = predict_nearest_centroid(fitted.classifier, data.test.X);
            const Metrics m = metrics(rec.predictions, data.test.labels, fitted.model.Beta);
            rec.accuracy = m.accuracy;
            rec.cardinality = m.cardinality;
            rec.lambda = cv.best_lambda;
            rec.final_orth_residual = is_dfsos(*method.sos) && !fitted.trace.orth_residual.empty()
                                          ? fitted.trace.orth_residual.back()
                                          : std::numeric_limits<double>::quiet_NaN();
        } else {
            rec.predictions = knn_predict(data.train.X, data.train.labels, data.test.X, method.knn_k);
            rec.accuracy = accuracy(rec.predictions, data.test.labels);
            rec.cardinality = std::numeric_limits<double>::quiet_NaN();
            rec.final_orth_residual = std::numeric_limits<double>::quiet_NaN();
        }
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
        rec.predictions.clear();
    }
    rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace

BenchReport run_benchmark(const std::vector<DataSource>& datasets, const std::vector<BenchMethod>& methods,
                          const SolverConfig& cfg, const CvPlan& plan, int repetitions) {
    if (repetitions < 1) fail(ErrorKind::InvalidArgument, "repetitions must be >= 1");
    plan.validate();
    cfg.validate();
    std::vector<RunRecord> records;
    for (const auto& source : datasets) {
        for (int rep = 0; rep < repetitions; ++rep) {
            const unsigned seed = cfg.seed + static_cast<unsigned>(rep);
            TrainTest data;
            try {
                data = source.draw(seed);
            } catch (const Error& e) {
                for (const auto& method : methods) {
                    RunRecord rec;
                    rec.dataset = source.name;
                    rec.method = method.name;
                    rec.repetition = rep;
                    rec.ok = false;
                    rec.error = e.what();
                    records.push_back(std::move(rec));
                }
                continue;
            }
            SolverConfig rep_cfg = cfg;
            rep_cfg.seed = seed;
            for (const auto& method : methods) {
                RunRecord rec = evaluate_method(method, data, rep_cfg, plan);
                rec.dataset = source.name;
                rec.repetition = rep;
                records.push_back(std::move(rec));
            }
        }
    }
    std::vector<std::string> order;
    for (const auto& m : methods) order.push_back(m.name);
    return aggregate(std::move(records), order);
}

namespace {

std::string fixed3(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s = buf;
    // Trim trailing zeros but keep one decimal, matching "1.0 (0.0)".
    while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    if (s == "-0.0") s = "0.0";
    return s;
}

std::string cell(const Summary& s) { return fixed3(s.mean) + " (" + fixed3(s.variance) + ")"; }

std::string precise(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

void write_table(std::ostream& out, const BenchReport& report) {
    for (const auto& ds : report.datasets) {
        out << "Data\tMeasure";
        for (const auto& m : ds.methods) out << '\t' << m.method;
        out << '\n';
        out << ds.name << "\tAccuracy";
        for (const auto& m : ds.methods) out << '\t' << cell(m.accuracy);
        out << "\n\tRun-time (s)";
        for (const auto& m : ds.methods) out << '\t' << cell(m.runtime);
        out << "\n\tCardinality";
        for (const auto& m : ds.methods) out << '\t' << (m.cardinality ? cell(*m.cardinality) : std::string("--"));
        out << '\n';
    }
}

void write_summary(std::ostream& out, const BenchReport& report) {
    for (const auto& ds : report.datasets) {
        for (const auto& m : ds.methods) {
            const std::string key = ds.name + "." + m.method + ".";
            out << key << "accuracy_mean=" << precise(m.accuracy.mean) << '\n';
            out << key << "accuracy_variance=" << precise(m.accuracy.variance) << '\n';
            out << key << "runtime_mean=" << precise(m.runtime.mean) << '\n';
            out << key << "runtime_variance=" << precise(m.runtime.variance) << '\n';
            if (m.cardinality) {
                out << key << "cardinality_mean=" << precise(m.cardinality->mean) << '\n';
                out << key << "cardinality_variance=" << precise(m.cardinality->variance) << '\n';
            }
            out << key << "failures=" << m.failures << '\n';
        }
    }
}

void write_cosine(std::ostream& out, const BenchReport& report) {
    for (const auto& ds : report.datasets) {
        out << ds.name;
        for (const auto& m : ds.methods) out << ',' << m.method;
        out << '\n';
        for (std::size_t a = 0; a < ds.methods.size(); ++a) {
            out << ds.methods[a].method;
            for (std::size_t b = 0; b < ds.methods.size(); ++b)
                out << ',' << precise(ds.cosine(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
            out << '\n';
        }
    }
}

void write_records(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "dataset,method,repetition,status,accuracy,runtime_s,cardinality,lambda\n";
    for (const auto& r : records) {
        out << r.dataset << ',' << r.method << ',' << r.repetition << ',' << (r.ok ? "ok" : "failed") << ','
            << precise(r.accuracy) << ',' << precise(r.runtime_s) << ',' << precise(r.cardinality) << ','
            << precise(r.lambda) << '\n';
    }
}

void write_predictions(std::ostream& out, const std::vector<RunRecord>& records) {
    for (const auto& r : records) {
        if (!r.ok) continue;
        out << r.dataset << '\t' << r.method << '\t' << r.repetition << '\t';
        for (std::size_t i = 0; i < r.predictions.size(); ++i) out << (i ? "," : "") << r.predictions[i];
        out << '\n';
    }
}

std::vector<RunRecord> read_records(std::istream& records, std::istream* predictions) {
    std::vector<RunRecord> out;
    std::string line;
    if (!std::getline(records, line)) fail(ErrorKind::IoError, "records file is empty");
    int line_no = 1;
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (...) {
            fail(ErrorKind::NonNumericField, "records line " + std::to_string(line_no));
        }
    };
    while (std::getline(records, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 8) fail(ErrorKind::RaggedRows, "records line " + std::to_string(line_no));
        RunRecord r;
        r.dataset = f[0];
        r.method = f[1];
        r.repetition = static_cast<int>(number(f[2]));
        r.ok = f[3] == "ok";
        r.accuracy = number(f[4]);
        r.runtime_s = number(f[5]);
        r.cardinality = number(f[6]);
        r.lambda = number(f[7]);
        out.push_back(std::move(r));
    }
    if (predictions) {
        while (std::getline(*predictions, line)) {
            if (line.empty()) continue;
            const auto f = split(line, '\t');
            if (f.size() != 4) fail(ErrorKind::RaggedRows, "predictions line malformed");
            const int rep = std::stoi(f[2]);
            for (auto& r : out) {
                if (r.dataset != f[0] || r.method != f[1] || r.repetition != rep) continue;
                r.predictions.clear();
                for (const auto& label : split(f[3], ',')) r.predictions.push_back(std::stoi(label));
            }
        }
    }
    return out;
}

}  // namespace dfsos
