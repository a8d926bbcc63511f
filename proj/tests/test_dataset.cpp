#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "rangesel/dataset.hpp"
#include "rangesel/io_util.hpp"
#include "support/oracles.hpp"

using namespace rangesel;

namespace {

std::vector<std::vector<double>> as_rows(const Dataset& ds) {
    std::vector<std::vector<double>> out(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        auto row = ds.row(r);
        out[r].assign(row.begin(), row.end());
    }
    return out;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("gaussian generation is reproducible and normalized") {
    GaussianSpec spec;
    spec.dims = 3;
    spec.rows = 500;
    spec.correlation = 0.5;
    spec.seed = 42;

    Dataset a = generate_gaussian(spec);
    Dataset b = generate_gaussian(spec);
    REQUIRE(a.rows() == 500);
    REQUIRE(a.dims() == 3);
    CHECK(a.values() == b.values());

    for (double v : a.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // min-max normalization attains both endpoints in every column
    for (std::size_t c = 0; c < a.dims(); ++c) {
        double lo = 1.0, hi = 0.0;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            lo = std::min(lo, a.row(r)[c]);
            hi = std::max(hi, a.row(r)[c]);
        }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
}

TEST_CASE("gaussian pairwise correlation matches the spec parameter") {
    GaussianSpec spec;
    spec.dims = 2;
    spec.rows = 10000;
    spec.correlation = 0.9;
    spec.seed = 7;

    Dataset ds = generate_gaussian(spec);
    std::vector<double> c0(ds.rows()), c1(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        c0[r] = ds.row(r)[0];
        c1[r] = ds.row(r)[1];
    }
    // Pearson correlation is invariant under the per-column affine
    // normalization, so the sample estimate targets 0.9 directly.
    const double rho = oracle::pearson(c0, c1);
    CHECK(rho == doctest::Approx(0.9).epsilon(0.05));
    CHECK(column_correlation(ds, 0, 1) == doctest::Approx(rho).epsilon(1e-9));
}

TEST_CASE("gaussian rejects bad parameters") {
    GaussianSpec spec;
    spec.dims = 0;
    CHECK_THROWS_AS(generate_gaussian(spec), std::invalid_argument);
    spec.dims = 2;
    spec.rows = 0;
    CHECK_THROWS_AS(generate_gaussian(spec), std::invalid_argument);
    spec.rows = 10;
    spec.correlation = 1.0;
    CHECK_THROWS_AS(generate_gaussian(spec), std::invalid_argument);
    spec.correlation = -0.1;
    CHECK_THROWS_AS(generate_gaussian(spec), std::invalid_argument);
}

TEST_CASE("constant columns normalize to 0.5") {
    std::vector<double> raw = {
        3.0, 1.0,
        3.0, 2.0,
        3.0, 4.0,
    };
    Dataset ds = normalize_rows(2, raw, {"a", "b"});
    for (std::size_t r = 0; r < 3; ++r) CHECK(ds.row(r)[0] == 0.5);
    CHECK(ds.row(0)[1] == 0.0);
    CHECK(ds.row(2)[1] == 1.0);
}

TEST_CASE("true_selectivity agrees with a nested-loop count") {
    GaussianSpec spec;
    spec.dims = 4;
    spec.rows = 800;
    spec.correlation = 0.3;
    spec.seed = 11;
    Dataset ds = generate_gaussian(spec);
    auto rows = as_rows(ds);

    RangeQuery q;
    q.bounds.resize(4);
    q.bounds[0] = Interval{0.2, 0.7};
    q.bounds[2] = Interval{0.0, 0.4};

    oracle::Range r;
    r.cols.resize(4);
    r.cols[0] = {0.2, 0.7};
    r.cols[2] = {0.0, 0.4};

    CHECK(true_selectivity(ds, q) == oracle::selectivity(rows, r));

    // strict lower bound, inclusive upper: hand-built 1-d rows
    Dataset tiny = normalize_rows(1, {0.0, 1.0, 2.0, 3.0, 4.0}, {"x"});
    RangeQuery edge;
    edge.bounds.resize(1);
    edge.bounds[0] = Interval{0.25, 0.75};
    // normalized values 0, .25, .5, .75, 1 -> matches are 0.5 and 0.75
    CHECK(true_selectivity(tiny, edge) == doctest::Approx(0.4));
}

TEST_CASE("unconstrained query matches everything; mismatched dims throw") {
    Dataset ds = generate_gaussian({.dims = 2, .rows = 50, .correlation = 0.0, .seed = 3});
    RangeQuery all;
    all.bounds.resize(2);
    CHECK(true_selectivity(ds, all) == 1.0);

    RangeQuery bad;
    bad.bounds.resize(3);
    CHECK_THROWS_AS(true_selectivity(ds, bad), std::invalid_argument);
}

TEST_CASE("csv round-trip preserves values and rejects malformed input") {
    GaussianSpec spec;
    spec.dims = 3;
    spec.rows = 120;
    spec.correlation = 0.6;
    spec.seed = 9;
    Dataset ds = generate_gaussian(spec);

    const std::string path = temp_path("rangesel_test_roundtrip.csv");
    save_csv(ds, path);
    Dataset back = load_csv(path, true);
    REQUIRE(back.rows() == ds.rows());
    REQUIRE(back.dims() == ds.dims());
    // values are already normalized, so reloading re-normalizes to identity
    for (std::size_t i = 0; i < ds.values().size(); ++i)
        CHECK(back.values()[i] == doctest::Approx(ds.values()[i]).epsilon(1e-15));

    save_csv(ds, temp_path("rangesel_test_roundtrip2.csv"));
    CHECK(read_file(path) == read_file(temp_path("rangesel_test_roundtrip2.csv")));
    std::filesystem::remove(temp_path("rangesel_test_roundtrip2.csv"));

    const std::string ragged = temp_path("rangesel_test_ragged.csv");
    write_file(ragged, "a,b\n1,2\n3\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged, true), doctest::Contains("row 2"), std::runtime_error);

    const std::string garbled = temp_path("rangesel_test_garbled.csv");
    write_file(garbled, "a,b\n1,2\n3,oops\n");
    try {
        load_csv(garbled, true);
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }

    std::filesystem::remove(path);
    std::filesystem::remove(ragged);
    std::filesystem::remove(garbled);
}

TEST_CASE("load_csv without header derives column names") {
    const std::string path = temp_path("rangesel_test_noheader.csv");
    write_file(path, "1,5\n2,6\n3,7\n");
    Dataset ds = load_csv(path, false);
    REQUIRE(ds.rows() == 3);
    CHECK(ds.columns()[0].name == "x0");
    CHECK(ds.row(0)[0] == 0.0);
    CHECK(ds.row(2)[1] == 1.0);
    std::filesystem::remove(path);
}
