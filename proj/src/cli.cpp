#include "dfsos/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dfsos/classify.hpp"
#include "dfsos/datagen.hpp"
#include "dfsos/experiment.hpp"
#include "dfsos/model_io.hpp"
#include "dfsos/parallel.hpp"

namespace dfsos {
namespace {

namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct SolverFlags {
    std::string profile = "gaussian";
    std::optional<double> gamma, lambda, lambda_scale, rho0, eta, sigma, tol_inner, tol_outer, mu;
    std::optional<int> max_inner, max_outer;
    std::optional<unsigned> seed;
    bool per_column = false;

    void attach(CLI::App* app) {
        app->add_option("--profile", profile, "Default settings: gaussian or ucr")
            ->check(CLI::IsMember({"gaussian", "ucr"}));
        app->add_option("--gamma", gamma, "Ridge weight γ");
        app->add_option("--lambda", lambda, "ℓ1 weight λ");
        app->add_option("--lambda-scale", lambda_scale, "λ as a multiple of λ_max")->excludes("--lambda");
        app->add_option("--rho0", rho0, "Initial ρ");
        app->add_option("--eta", eta, "ρ schedule threshold η");
        app->add_option("--sigma", sigma, "ρ growth factor σ");
        app->add_option("--mu", mu, "ADMM penalty μ for the deflation-ADMM β solver");
        app->add_option("--tol-inner", tol_inner, "β-solver tolerance");
        app->add_option("--max-inner", max_inner, "β-solver iteration cap");
        app->add_option("--tol-outer", tol_outer, "Outer tolerance");
        app->add_option("--max-outer", max_outer, "Outer iteration cap");
        app->add_option("--seed", seed, "Seed for initial scores and folds");
        app->add_flag("--per-column-lambda", per_column, "Scale λ separately for each discriminant column");
    }

    SolverConfig build() const {
        SolverConfig cfg = profile == "ucr" ? ucr_profile() : gaussian_profile();
        if (gamma) cfg.gamma = *gamma;
        if (lambda) cfg.lambda = *lambda;
        if (lambda_scale) cfg.lambda_scale = *lambda_scale;
        if (rho0) cfg.rho0 = *rho0;
        if (eta) cfg.eta = *eta;
        if (sigma) cfg.sigma = *sigma;
        if (mu) cfg.mu_admm = *mu;
        if (tol_inner) cfg.tol_inner_beta = *tol_inner;
        if (max_inner) cfg.max_inner_beta = *max_inner;
        if (tol_outer) cfg.tol_outer = *tol_outer;
        if (max_outer) cfg.max_outer = *max_outer;
        if (seed) cfg.seed = *seed;
        cfg.per_column_lambda = per_column;
        cfg.validate();
        return cfg;
    }

    CvPlan plan(std::optional<int> folds) const {
        CvPlan p = profile == "ucr" ? CvPlan::ucr() : CvPlan::gaussian();
        if (folds) p.folds = *folds;
        return p;
    }
};

struct DataFlags {
    std::string path;
    std::string format = "tsv";

    void attach(CLI::App* app, const std::string& name, const std::string& help) {
        app->add_option(name, path, help)->required();
        app->add_option("--format", format, "tsv (label first) or csv (label last)")
            ->check(CLI::IsMember({"tsv", "csv"}));
    }

    DelimitedFormat kind() const { return format == "csv" ? DelimitedFormat::LabelLastCSV : DelimitedFormat::LabelFirstTSV; }
};

struct GaussianFlags {
    GaussianSpec spec;

    void attach(CLI::App* app) {
        app->add_option("--K", spec.K, "Number of classes");
        app->add_option("--r", spec.r, "Shared correlation r in [0, 1)");
        app->add_option("--p", spec.p, "Number of features");
        app->add_option("--block", spec.block, "Informative features per class");
        app->add_option("--mean", spec.mean_value, "Mean on the informative block");
        app->add_option("--n-train", spec.n_train_per_class, "Training observations per class");
        app->add_option("--n-test", spec.n_test_per_class, "Test observations per class");
        app->add_option("--seed", spec.seed, "Sampler seed");
    }
};

class OutputFile {
public:
    OutputFile(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (path.empty() || path == "-") return;
        file_.open(path, std::ios::binary);
        if (!file_) fail(ErrorKind::IoError, "cannot write '" + path + "'");
        out_ = &file_;
        path_ = path;
    }
    std::ostream& stream() { return *out_; }
    void close() {
        if (!path_.empty()) {
            file_.close();
            if (!file_) fail(ErrorKind::IoError, "write to '" + path_ + "' failed");
        }
    }

private:
    std::ofstream file_;
    std::ostream* out_;
    std::string path_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    file << text;
    if (!file) fail(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) fail(ErrorKind::IoError, "cannot create directory '" + dir.string() + "'");
}

/// Column standard deviations (population form); constant columns keep scale 1.
VectorXd column_scales(const MatrixXd& X) {
    const Centered c = center_columns(X);
    VectorXd s = (c.X.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt().transpose();
    for (Eigen::Index j = 0; j < s.size(); ++j)
        if (!(s(j) > 0.0)) s(j) = 1.0;
    return s;
}

Dataset load_for_model(const ModelFile& model, const DataFlags& flags) {
    LabelMap map;
    map.values = model.class_values;
    if (map.values.empty())
        for (int k = 1; k <= model.K; ++k) map.values.push_back(k);
    Dataset data = load_delimited(flags.path, flags.kind(), map);
    data.K = model.K;
    data.X = model.prepare(data.X);
    return data;
}

std::string label_text(const ModelFile& model, int label) {
    if (model.class_values.empty()) return std::to_string(label);
    return format_number(model.class_values[static_cast<std::size_t>(label - 1)]);
}

int cmd_generate(const GaussianFlags& g, const std::string& out_dir, std::ostream& out) {
    g.spec.validate();
    const TrainTest data = generate_gaussians(g.spec);
    const fs::path dir(out_dir);
    ensure_dir(dir);
    save_delimited(data.train, (dir / "train.tsv").string(), DelimitedFormat::LabelFirstTSV);
    save_delimited(data.test, (dir / "test.tsv").string(), DelimitedFormat::LabelFirstTSV);
    std::ostringstream manifest;
    manifest << "K=" << g.spec.K << "\nr=" << format_precise(g.spec.r) << "\np=" << g.spec.p
             << "\nblock=" << g.spec.block << "\nmean=" << format_precise(g.spec.mean_value)
             << "\nn_train_per_class=" << g.spec.n_train_per_class << "\nn_test_per_class=" << g.spec.n_test_per_class
             << "\nseed=" << g.spec.seed << "\ntrain=train.tsv\ntest=test.tsv\n";
    write_text(dir / "manifest.txt", manifest.str());
    out << "wrote " << (dir / "train.tsv").string() << " (" << data.train.n() << " rows) and "
        << (dir / "test.tsv").string() << " (" << data.test.n() << " rows)\n";
    return 0;
}

struct FitCommand {
    DataFlags data;
    SolverFlags solver;
    std::string method = "dfsos1";
    std::optional<int> q;
    bool cv = false;
    std::optional<int> folds;
    bool standardize = false;
    std::string model_path;
    std::string trace_path;
};

int cmd_fit(const FitCommand& c, std::ostream& out, std::ostream& err) {
    const Method method = parse_method(c.method);
    SolverConfig cfg = c.solver.build();
    Dataset train = load_delimited(c.data.path, c.data.kind());
    const int q = c.q.value_or(train.K - 1);

    std::optional<VectorXd> scales;
    if (c.standardize) {
        scales = column_scales(train.X);
        train.X = train.X * scales->cwiseInverse().asDiagonal();
    }
    if (c.cv) {
        const CvResult result = cross_validate(train, cfg, c.solver.plan(c.folds), method, q);
        cfg.lambda_scale.reset();
        cfg.lambda = result.best_lambda;
        out << "cv selected lambda=" << format_precise(result.best_lambda) << " (multiplier "
            << format_precise(result.best_multiplier) << ")\n";
    }

    const TrainedClassifier fitted = train_classifier(train, cfg, method, q);
    ModelFile file;
    file.model = fitted.model;
    file.K = train.K;
    file.p = train.p();
    file.seed = cfg.seed;
    file.iterations = fitted.trace.iterations;
    file.not_converged = !fitted.trace.converged;
    file.column_means = fitted.classifier.column_means;
    file.column_scales = scales;
    file.class_values = train.class_values;
    file.centroids = fitted.classifier.centroids;
    save_model(file, c.model_path);

    if (!c.trace_path.empty()) {
        OutputFile trace(c.trace_path, out);
        write_trace(trace.stream(), fitted.trace);
        trace.close();
    }
    for (const auto& w : fitted.trace.warnings) err << "warning: " << w << '\n';
    out << "method=" << to_string(method) << " q=" << q << " lambda=" << format_precise(fitted.model.lambda)
        << " iterations=" << fitted.trace.iterations << " cardinality="
        << format_precise(fitted.model.Beta.rows() ? static_cast<double>(nonzero_rows(fitted.model.Beta)) /
                                                         static_cast<double>(fitted.model.Beta.rows())
                                                   : 0.0)
        << (file.not_converged ? " not_converged" : "") << '\n';
    return 0;
}

int cmd_predict(const std::string& model_path, const DataFlags& data, const std::string& out_path, std::ostream& out) {
    const ModelFile model = load_model(model_path);
    // Labels in the input are ignored, so unseen values are allowed here.
    Dataset test = load_delimited(data.path, data.kind());
    test.X = model.prepare(test.X);
    const auto pred = predict_nearest_centroid(model.classifier(), test.X);
    OutputFile file(out_path, out);
    for (int label : pred) file.stream() << label_text(model, label) << '\n';
    file.close();
    return 0;
}

int cmd_evaluate(const std::string& model_path, const DataFlags& data, const std::string& out_path,
                 std::ostream& out) {
    const ModelFile model = load_model(model_path);
    const Dataset test = load_for_model(model, data);
    const auto pred = predict_nearest_centroid(model.classifier(), test.X);
    const Metrics m = metrics(pred, test.labels, model.model.Beta);
    OutputFile file(out_path, out);
    file.stream() << "n=" << test.n() << "\naccuracy=" << format_precise(m.accuracy)
                  << "\ncardinality=" << format_precise(m.cardinality)
                  << "\nentry_density=" << format_precise(m.entry_density) << '\n';
    file.close();
    return 0;
}

int cmd_project(const std::string& model_path, const DataFlags& data, const std::string& out_path,
                std::ostream& out) {
    const ModelFile model = load_model(model_path);
    const Dataset test = load_for_model(model, data);
    const CentroidModel classifier = model.classifier();
    const MatrixXd scores = project(test.X, classifier.Beta, classifier.column_means);
    const auto pred = nearest_centroid(scores, classifier.centroids);
    OutputFile file(out_path, out);
    auto& s = file.stream();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) s << "score_" << j + 1 << ',';
    s << "true_label,predicted_label\n";
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) s << format_precise(scores(i, j)) << ',';
        s << label_text(model, test.labels[static_cast<std::size_t>(i)]) << ','
          << label_text(model, pred[static_cast<std::size_t>(i)]) << '\n';
    }
    file.close();
    return 0;
}

int cmd_cv(const FitCommand& c, const std::string& out_path, std::ostream& out) {
    const Method method = parse_method(c.method);
    const SolverConfig cfg = c.solver.build();
    Dataset train = load_delimited(c.data.path, c.data.kind());
    if (c.standardize) train.X = train.X * column_scales(train.X).cwiseInverse().asDiagonal();
    const int q = c.q.value_or(train.K - 1);
    const CvPlan plan = c.solver.plan(c.folds);
    const CvResult result = cross_validate(train, cfg, plan, method, q);
    OutputFile file(out_path, out);
    auto& s = file.stream();
    s << "multiplier,mean_accuracy,failed_folds\n";
    for (std::size_t m = 0; m < plan.grid_multipliers.size(); ++m) {
        int failed = 0;
        for (const auto& cell : result.cells) failed += cell.failed && cell.multiplier == plan.grid_multipliers[m];
        s << format_precise(plan.grid_multipliers[m]) << ',' << format_precise(result.mean_accuracy[m]) << ','
          << failed << '\n';
    }
    s << "best_multiplier=" << format_precise(result.best_multiplier) << '\n';
    s << "best_lambda=" << format_precise(result.best_lambda) << '\n';
    file.close();
    return 0;
}

std::vector<BenchMethod> parse_methods(const std::vector<std::string>& names) {
    std::vector<BenchMethod> out;
    for (const auto& n : names) out.push_back(BenchMethod::parse(n));
    return out;
}

void write_report(const fs::path& dir, const BenchReport& report) {
    ensure_dir(dir);
    std::ostringstream table, summary, cosine, records, predictions;
    write_table(table, report);
    write_summary(summary, report);
    write_cosine(cosine, report);
    write_records(records, report.records);
    write_predictions(predictions, report.records);
    write_text(dir / "table.tsv", table.str());
    write_text(dir / "summary.txt", summary.str());
    write_text(dir / "cosine.csv", cosine.str());
    write_text(dir / "records.csv", records.str());
    write_text(dir / "predictions.tsv", predictions.str());
}

struct BenchCommand {
    GaussianFlags gaussian;
    std::string name;
    std::string train_path, test_path;
    std::string format = "tsv";
    std::vector<std::string> methods{"dfsos1", "dfsos2", "apg", "admm"};
    int repetitions = 10;
    std::optional<int> folds;
    SolverFlags solver;
    std::string out_dir;
};

int cmd_benchmark(const BenchCommand& c, std::ostream& out) {
    const SolverConfig cfg = c.solver.build();
    DataSource source;
    if (!c.train_path.empty()) {
        if (c.test_path.empty()) fail(ErrorKind::InvalidArgument, "--train needs --test");
        const auto format = c.format == "csv" ? DelimitedFormat::LabelLastCSV : DelimitedFormat::LabelFirstTSV;
        source.train = load_delimited(c.train_path, format);
        LabelMap map;
        map.values = source.train.class_values;
        source.test = load_delimited(c.test_path, format, map);
        source.test.K = source.train.K;
        source.name = c.name.empty() ? fs::path(c.train_path).stem().string() : c.name;
    } else {
        c.gaussian.spec.validate();
        source.gaussian = c.gaussian.spec;
        source.name = c.name.empty() ? "gaussian" : c.name;
    }
    const BenchReport report =
        run_benchmark({source}, parse_methods(c.methods), cfg, c.solver.plan(c.folds), c.repetitions);
    write_report(c.out_dir, report);
    write_table(out, report);
    return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_dir, std::ostream& out) {
    std::vector<RunRecord> records;
    std::vector<std::string> order;
    for (const auto& d : dirs) {
        std::istringstream rec(read_text(fs::path(d) / "records.csv"));
        std::istringstream pred(read_text(fs::path(d) / "predictions.tsv"));
        for (auto& r : read_records(rec, &pred)) {
            if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
            records.push_back(std::move(r));
        }
    }
    const BenchReport report = aggregate(std::move(records), order);
    write_report(out_dir, report);
    write_table(out, report);
    return 0;
}

int exit_code_for(ErrorKind kind) {
    switch (classify_error(kind)) {
        case ErrorClass::Usage: return kExitUsage;
        case ErrorClass::Data: return kExitData;
        case ErrorClass::Numerical: return kExitNumerical;
    }
    return kExitData;
}

}  // namespace

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse optimal scoring: data generation, fitting, evaluation and benchmarks"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML file with option defaults (flags take precedence)");
    std::optional<unsigned> threads;
    app.add_option("--threads", threads, "Worker thread cap (default: $DFSOS_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    GaussianFlags gen_flags;
    std::string gen_out = ".";
    auto* generate = app.add_subcommand("generate", "Sample Gaussian train/test files");
    gen_flags.attach(generate);
    generate->add_option("--out", gen_out, "Output directory");

    FitCommand fit_cmd;
    auto* fit = app.add_subcommand("fit", "Fit a model and write it with its trace");
    fit_cmd.data.attach(fit, "--data", "Training data file");
    fit_cmd.solver.attach(fit);
    fit->add_option("--method", fit_cmd.method, "dfsos1, dfsos2, apg or admm");
    fit->add_option("--q", fit_cmd.q, "Number of discriminant vectors (default K-1)");
    fit->add_flag("--cv", fit_cmd.cv, "Choose λ by cross validation on the profile grid");
    fit->add_option("--folds", fit_cmd.folds, "Cross-validation folds");
    fit->add_flag("--standardize", fit_cmd.standardize, "Scale features to unit variance");
    fit->add_option("--out", fit_cmd.model_path, "Model file")->required();
    fit->add_option("--trace", fit_cmd.trace_path, "Trace CSV");

    std::string model_path, out_path;
    DataFlags io_data;
    auto add_model_cmd = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--model", model_path, "Model file")->required();
        io_data.attach(sub, "--data", "Data file");
        sub->add_option("--out", out_path, "Output file (default stdout)");
        return sub;
    };
    auto* predict = add_model_cmd("predict", "Write one predicted label per line");
    auto* evaluate = add_model_cmd("evaluate", "Accuracy and sparsity on labelled data");
    auto* proj = add_model_cmd("project", "Discriminant scores with true and predicted labels");

    FitCommand cv_cmd;
    std::string cv_out;
    auto* cv = app.add_subcommand("cv", "Cross-validation table over the λ grid");
    cv_cmd.data.attach(cv, "--data", "Training data file");
    cv_cmd.solver.attach(cv);
    cv->add_option("--method", cv_cmd.method, "dfsos1, dfsos2, apg or admm");
    cv->add_option("--q", cv_cmd.q, "Number of discriminant vectors (default K-1)");
    cv->add_option("--folds", cv_cmd.folds, "Cross-validation folds");
    cv->add_flag("--standardize", cv_cmd.standardize, "Scale features to unit variance");
    cv->add_option("--out", cv_out, "Output file (default stdout)");

    BenchCommand bench_cmd;
    auto* bench = app.add_subcommand("benchmark", "Repeated CV + fit + evaluate for several methods");
    bench_cmd.gaussian.attach(bench);
    bench->remove_option(bench->get_option("--seed"));
    bench_cmd.solver.attach(bench);
    bench->add_option("--name", bench_cmd.name, "Dataset name in the report");
    bench->add_option("--train", bench_cmd.train_path, "Training file (instead of Gaussian data)");
    bench->add_option("--test", bench_cmd.test_path, "Test file");
    bench->add_option("--format", bench_cmd.format, "tsv or csv")->check(CLI::IsMember({"tsv", "csv"}));
    bench->add_option("--methods", bench_cmd.methods, "Methods, e.g. dfsos1 dfsos2 apg admm knn1")->delimiter(',');
    bench->add_option("--repetitions", bench_cmd.repetitions, "Repetitions (seed, seed+1, ...)");
    bench->add_option("--folds", bench_cmd.folds, "Cross-validation folds");
    bench->add_option("--out-dir", bench_cmd.out_dir, "Report directory")->required();

    std::vector<std::string> compare_dirs;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Merge benchmark run directories into one report");
    compare->add_option("dirs", compare_dirs, "Run directories holding records.csv and predictions.tsv")->required();
    compare->add_option("--out-dir", compare_out, "Report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (threads) set_max_threads(*threads);
        // Benchmark data is redrawn per repetition from the solver seed.
        if (bench_cmd.solver.seed) bench_cmd.gaussian.spec.seed = *bench_cmd.solver.seed;

        if (generate->parsed()) return cmd_generate(gen_flags, gen_out, out);
        if (fit->parsed()) return cmd_fit(fit_cmd, out, err);
        if (predict->parsed()) return cmd_predict(model_path, io_data, out_path, out);
        if (evaluate->parsed()) return cmd_evaluate(model_path, io_data, out_path, out);
        if (proj->parsed()) return cmd_project(model_path, io_data, out_path, out);
        if (cv->parsed()) return cmd_cv(cv_cmd, cv_out, out);
        if (bench->parsed()) return cmd_benchmark(bench_cmd, out);
        if (compare->parsed()) return cmd_compare(compare_dirs, compare_out, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace dfsos
