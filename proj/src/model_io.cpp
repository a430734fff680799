#include "dfsos/model_io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dfsos/datagen.hpp"

namespace dfsos {

CentroidModel ModelFile::classifier() const {
    CentroidModel c;
    c.centroids = centroids;
    c.Beta = model.Beta;
    c.column_means = column_means;
    return c;
}

MatrixXd ModelFile::prepare(const MatrixXd& X) const {
    if (X.cols() != p)
        fail(ErrorKind::ShapeMismatch, "data has " + std::to_string(X.cols()) + " features, model expects " +
                                           std::to_string(p));
    if (!column_scales) return X;
    return X * column_scales->cwiseInverse().asDiagonal();
}

namespace {

std::string join(const VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_precise(v(i));
    }
    return s;
}

void write_block(std::ostream& out, const char* name, const MatrixXd& M) {
    out << '[' << name << "] " << M.rows() << ' ' << M.cols() << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) out << join(M.row(i).transpose()) << '\n';
}

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorKind::IoError, "model file: " + what); }

double to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) corrupt("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        corrupt("bad number '" + s + "'");
    }
}

std::vector<double> split_numbers(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return out;
    std::istringstream in(s);
    std::string field;
    while (std::getline(in, field, ',')) out.push_back(to_double(field));
    return out;
}

VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

MatrixXd read_block(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) corrupt("missing [" + name + "] block");
    std::istringstream head(line);
    std::string tag;
    Eigen::Index rows = -1, cols = -1;
    head >> tag >> rows >> cols;
    if (tag != "[" + name + "]" || rows < 0 || cols < 0) corrupt("expected [" + name + "] block");
    MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) corrupt("[" + name + "] block is truncated");
        const auto values = split_numbers(line);
        if (static_cast<Eigen::Index>(values.size()) != cols) corrupt("[" + name + "] row has wrong width");
        M.row(i) = to_vector(values).transpose();
    }
    return M;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& f) {
    out << "method=" << to_string(f.model.method) << '\n';
    out << "K=" << f.K << '\n';
    out << "p=" << f.p << '\n';
    out << "q=" << f.model.q << '\n';
    out << "gamma=" << format_precise(f.model.gamma) << '\n';
    out << "lambda=" << format_precise(f.model.lambda) << '\n';
    out << "seed=" << f.seed << '\n';
    out << "iterations=" << f.iterations << '\n';
    out << "not_converged=" << (f.not_converged ? 1 : 0) << '\n';
    out << "column_means=" << join(f.column_means) << '\n';
    if (f.column_scales) out << "column_scales=" << join(*f.column_scales) << '\n';
    std::string values;
    for (std::size_t i = 0; i < f.class_values.size(); ++i) values += (i ? "," : "") + format_number(f.class_values[i]);
    out << "class_values=" << values << '\n';
    write_block(out, "Theta", f.model.Theta);
    write_block(out, "Beta", f.model.Beta);
    write_block(out, "Centroids", f.centroids);
}

ModelFile read_model(std::istream& in) {
    std::map<std::string, std::string> header;
    std::string line;
    while (in.peek() != '[' && std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) corrupt("header line without '='");
        header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) corrupt("missing header key '" + key + "'");
        return it->second;
    };
    auto get_int = [&](const std::string& key) {
        const double v = to_double(get(key));
        if (v != static_cast<double>(static_cast<long long>(v))) corrupt("'" + key + "' is not an integer");
        return static_cast<long long>(v);
    };

    ModelFile f;
    try {
        f.model.method = parse_method(get("method"));
    } catch (const Error&) {
        corrupt("unknown method '" + get("method") + "'");
    }
    f.K = static_cast<int>(get_int("K"));
    f.p = static_cast<int>(get_int("p"));
    f.model.q = static_cast<int>(get_int("q"));
    f.model.gamma = to_double(get("gamma"));
    f.model.lambda = to_double(get("lambda"));
    f.seed = static_cast<unsigned>(get_int("seed"));
    f.iterations = static_cast<int>(get_int("iterations"));
    f.not_converged = get_int("not_converged") != 0;
    f.column_means = to_vector(split_numbers(get("column_means")));
    if (header.count("column_scales")) f.column_scales = to_vector(split_numbers(header["column_scales"]));
    f.class_values = split_numbers(get("class_values"));
    f.model.Theta = read_block(in, "Theta");
    f.model.Beta = read_block(in, "Beta");
    f.centroids = read_block(in, "Centroids");

    if (f.model.Theta.rows() != f.K || f.model.Theta.cols() != f.model.q || f.model.Beta.rows() != f.p ||
        f.model.Beta.cols() != f.model.q || f.column_means.size() != f.p || f.centroids.rows() != f.K ||
        f.centroids.cols() != f.model.q || (f.column_scales && f.column_scales->size() != f.p) ||
        (!f.class_values.empty() && static_cast<int>(f.class_values.size()) != f.K))
        corrupt("block shapes disagree with the header");
    return f;
}

void save_model(const ModelFile& file, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write '" + path + "'");
    write_model(out, file);
    if (!out) fail(ErrorKind::IoError, "write to '" + path + "' failed");
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
    return read_model(in);
}

void write_trace(std::ostream& out, const FitTrace& trace) {
    out << "iteration,column,objective,orth_residual,rho\n";
    for (std::size_t i = 0; i < trace.objective.size(); ++i) {
        out << i + 1 << ',' << (i < trace.column.size() ? trace.column[i] : 0) << ','
            << format_precise(trace.objective[i]) << ',' << format_precise(trace.orth_residual[i]) << ','
            << format_precise(trace.rho[i]) << '\n';
    }
}

}  // namespace dfsos
