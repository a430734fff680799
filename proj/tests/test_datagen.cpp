#include <doctest.h>

#include <filesystem>
#include <set>

#include "dfsos/datagen.hpp"
#include "test_util.hpp"

using namespace dfsos;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

GaussianSpec small_spec(double r, int p, int per_class, unsigned seed) {
    GaussianSpec s;
    s.K = 1 + 1;
    s.r = r;
    s.p = p;
    s.block = 1;
    s.mean_value = 0.0;
    s.n_train_per_class = per_class;
    s.n_test_per_class = 1;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("generate_gaussians shapes and determinism") {
    GaussianSpec spec;
    spec.p = 200;
    spec.block = 20;
    spec.n_train_per_class = 50;
    spec.n_test_per_class = 200;
    spec.seed = 7;
    const auto a = generate_gaussians(spec);
    const auto b = generate_gaussians(spec);
    CHECK(a.train.n() == 150);
    CHECK(a.test.n() == 600);
    CHECK(a.train.p() == 200);
    CHECK(a.train.X == b.train.X);
    CHECK(a.test.X == b.test.X);
    CHECK(a.train.labels == b.train.labels);
    spec.seed = 8;
    CHECK(generate_gaussians(spec).train.X != a.train.X);
}

TEST_CASE("generate_gaussians validation") {
    GaussianSpec spec;
    spec.r = 1.0;
    CHECK(kind_of([&] { generate_gaussians(spec); }) == ErrorKind::SpecInvalid);
    spec.r = 0.5;
    spec.block = 400;
    CHECK(kind_of([&] { generate_gaussians(spec); }) == ErrorKind::SpecInvalid);
    spec.block = 10;
    spec.K = 1;
    CHECK(kind_of([&] { generate_gaussians(spec); }) == ErrorKind::SpecInvalid);
}

TEST_CASE("class means follow the block layout") {
    GaussianSpec spec;
    spec.K = 3;
    spec.p = 30;
    spec.block = 10;
    spec.r = 0.1;
    spec.n_train_per_class = 2000;
    spec.n_test_per_class = 1;
    const auto data = generate_gaussians(spec).train;
    const double tol = 3.0 / std::sqrt(2000.0);
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXd mean = data.X.middleRows(k * 2000, 2000).colwise().mean().transpose();
        for (int j = 0; j < 30; ++j) {
            const double expected = (j >= 10 * k && j < 10 * (k + 1)) ? 0.7 : 0.0;
            CHECK(std::abs(mean(j) - expected) < tol);
        }
    }
}

TEST_CASE("sample correlation") {
    SUBCASE("r = 0 gives near-zero off-diagonals") {
        const auto X = generate_gaussians(small_spec(0.0, 20, 1000, 1)).train.X;
        const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
        const Eigen::MatrixXd S = Xc.transpose() * Xc / (X.rows() - 1.0);
        const double off = (S.sum() - S.trace()) / (20.0 * 19.0);
        CHECK(std::abs(off) < 0.05);
    }
    SUBCASE("r = 0.9 gives mean correlation near 0.9") {
        const auto X = generate_gaussians(small_spec(0.9, 10, 2500, 2)).train.X;
        const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
        const Eigen::MatrixXd S = Xc.transpose() * Xc / (X.rows() - 1.0);
        double corr = 0.0;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j)
                if (i != j) corr += S(i, j) / std::sqrt(S(i, i) * S(j, j));
        CHECK(std::abs(corr / 90.0 - 0.9) < 0.03);
    }
}

TEST_CASE("parse_delimited") {
    SUBCASE("basic tab layout") {
        const auto d = parse_delimited("1\t0.5\t0.5\n2\t1.0\t1.0\n", DelimitedFormat::LabelFirstTSV);
        CHECK(d.n() == 2);
        CHECK(d.p() == 2);
        CHECK(d.K == 2);
        CHECK(d.labels == std::vector<int>{1, 2});
    }
    SUBCASE("labels remapped in sorted order") {
        const auto d = parse_delimited("0,1,-1\n0,2,1\n0,3,0\n", DelimitedFormat::LabelLastCSV);
        CHECK(d.K == 3);
        CHECK(d.labels == std::vector<int>{1, 3, 2});
        CHECK(d.class_values == std::vector<double>{-1, 0, 1});
        CHECK(d.X(2, 1) == 3.0);
    }
    SUBCASE("errors carry positions") {
        try {
            parse_delimited("1\t2\t3\t4\n1\t2\t3\n", DelimitedFormat::LabelFirstTSV);
            FAIL("expected RaggedRows");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::RaggedRows);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
            CHECK(std::string(e.what()).find("3 fields") != std::string::npos);
        }
        try {
            parse_delimited("1\t2\n2\tabc\n", DelimitedFormat::LabelFirstTSV);
            FAIL("expected NonNumericField");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NonNumericField);
            CHECK(std::string(e.what()).find("line 2, column 2") != std::string::npos);
        }
        CHECK(kind_of([] { parse_delimited("1\t\n2\t3\n", DelimitedFormat::LabelFirstTSV); }) ==
              ErrorKind::NonNumericField);
        CHECK(kind_of([] { parse_delimited("1\tnan\n2\t3\n", DelimitedFormat::LabelFirstTSV); }) ==
              ErrorKind::NonNumericField);
        CHECK(kind_of([] { parse_delimited("", DelimitedFormat::LabelFirstTSV); }) == ErrorKind::IoError);
        CHECK(kind_of([] { parse_delimited("1\t2\n2\t3\n", DelimitedFormat::LabelFirstTSV, std::nullopt, 3); }) ==
              ErrorKind::LabelOutOfRange);
    }
    SUBCASE("held-out data through a training map") {
        LabelMap map{{1.0, 2.0, 5.0}};
        const auto d = parse_delimited("5\t1\n5\t2\n", DelimitedFormat::LabelFirstTSV, map);
        CHECK(d.K == 3);
        CHECK(d.labels == std::vector<int>{3, 3});
        CHECK(kind_of([&] { parse_delimited("4\t1\n", DelimitedFormat::LabelFirstTSV, map); }) ==
              ErrorKind::UnknownLabel);
    }
}

TEST_CASE("save and load round trip exactly") {
    std::mt19937_64 rng(3);
    Dataset d;
    d.K = 3;
    d.X = testutil::gaussian(rng, 9, 4) * 1e3;
    d.X(0, 0) = 0.1;
    d.X(1, 1) = -1e-300;
    d.X(2, 2) = 123456789.123456789;
    d.labels = testutil::random_labels(rng, 9, 3);
    const auto dir = std::filesystem::temp_directory_path() / "dfsos_datagen_test";
    std::filesystem::create_directories(dir);
    for (auto format : {DelimitedFormat::LabelFirstTSV, DelimitedFormat::LabelLastCSV}) {
        const auto path = (dir / "data.txt").string();
        save_delimited(d, path, format);
        const auto back = load_delimited(path, format);
        CHECK(back.X == d.X);
        CHECK(back.labels == d.labels);
        // Saving the reloaded data reproduces the same bytes.
        CHECK(format_delimited(back, format) == format_delimited(d, format));
    }
    std::filesystem::remove_all(dir);
    CHECK(kind_of([] { load_delimited("/nonexistent/file.tsv", DelimitedFormat::LabelFirstTSV); }) ==
          ErrorKind::IoError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(-0.5) == "-0.5");
    CHECK(std::stod(format_precise(0.1)) == 0.1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 1000; ++i) {
        const double v = normal(rng) * std::pow(10.0, normal(rng) * 5);
        CHECK(std::stod(format_precise(v)) == v);
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("kfold_split") {
    SUBCASE("balanced classes spread one per fold") {
        const std::vector<int> labels{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
        const auto folds = kfold_split(labels, 5, 1);
        REQUIRE(folds.size() == 5);
        for (const auto& f : folds) {
            REQUIRE(f.validation.size() == 2);
            CHECK(labels[static_cast<std::size_t>(f.validation[0])] != labels[static_cast<std::size_t>(f.validation[1])]);
        }
    }
    SUBCASE("partition and determinism on random labels") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const int K = testutil::uniform_int(rng, 2, 5);
            const int folds = testutil::uniform_int(rng, 2, 5);
            auto labels = testutil::random_labels(rng, testutil::uniform_int(rng, folds * K * 2, 80), K);
            bool enough = true;
            for (int k = 1; k <= K; ++k) enough &= std::count(labels.begin(), labels.end(), k) >= folds;
            if (!enough) continue;
            const auto a = kfold_split(labels, folds, static_cast<unsigned>(trial));
            const auto b = kfold_split(labels, folds, static_cast<unsigned>(trial));
            std::multiset<int> seen;
            for (std::size_t f = 0; f < a.size(); ++f) {
                CHECK(a[f].validation == b[f].validation);
                CHECK(a[f].train.size() + a[f].validation.size() == labels.size());
                seen.insert(a[f].validation.begin(), a[f].validation.end());
                for (int k = 1; k <= K; ++k) {
                    const auto in_val = std::count_if(a[f].validation.begin(), a[f].validation.end(),
                                                      [&](int i) { return labels[static_cast<std::size_t>(i)] == k; });
                    const auto total = std::count(labels.begin(), labels.end(), k);
                    CHECK(std::abs(static_cast<double>(in_val) - static_cast<double>(total) / folds) <= 1.0);
                }
            }
            CHECK(seen.size() == labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) CHECK(seen.count(static_cast<int>(i)) == 1);
        }
    }
    SUBCASE("too few members") {
        CHECK(kind_of([] { kfold_split({1, 1, 2}, 2, 0); }) == ErrorKind::TooFewSamples);
    }
}

TEST_CASE("subset keeps label metadata") {
    Dataset d;
    d.K = 2;
    d.X = Eigen::MatrixXd::Identity(3, 3);
    d.labels = {1, 2, 2};
    d.class_values = {-1, 1};
    const auto s = subset(d, {2, 0});
    CHECK(s.labels == std::vector<int>{2, 1});
    CHECK(s.X(0, 2) == 1.0);
    CHECK(s.class_values == d.class_values);
}
