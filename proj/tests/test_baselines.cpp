#include "doctest.h"

#include <cmath>
#include <memory>

#include "rangesel/baselines.hpp"
#include "rangesel/dataset.hpp"
#include "rangesel/rng.hpp"
#include "rangesel/workload.hpp"
#include "support/oracles.hpp"

using namespace rangesel;

namespace {

Dataset grid_dataset() {
    return generate_gaussian({.dims = 2, .rows = 2000, .correlation = 0.5, .seed = 77});
}

}  // namespace

TEST_CASE("one bucket per dimension reduces to the volume heuristic") {
    Dataset ds = grid_dataset();
    auto hist = build_grid_histogram(ds, 1);

    RangeQuery q;
    q.bounds.resize(2);
    q.bounds[0] = Interval{0.1, 0.6};
    q.bounds[1] = Interval{0.25, 0.75};
    CHECK(hist->estimate(q) == doctest::Approx(0.5 * 0.5).epsilon(1e-12));

    RangeQuery one;
    one.bounds.resize(2);
    one.bounds[0] = Interval{0.0, 0.5};
    CHECK(hist->estimate(one) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bucket-aligned queries are answered exactly") {
    Dataset ds = grid_dataset();
    std::vector<std::vector<double>> rows(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r)
        rows[r].assign(ds.row(r).begin(), ds.row(r).end());

    const std::size_t buckets = 4;
    auto hist = build_grid_histogram(ds, buckets);

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        RangeQuery q;
        q.bounds.resize(2);
        oracle::Range r;
        r.cols.resize(2);
        for (std::size_t c = 0; c < 2; ++c) {
            // strictly positive lower bounds: rows sitting exactly at 0 carry
            // mass the vertex algebra assigns to the empty zero plane
            auto a = 1 + rng.index(buckets);
            auto b = 1 + rng.index(buckets);
            if (a > b) std::swap(a, b);
            if (a == b) continue;
            const double lo = static_cast<double>(a) / buckets;
            const double hi = static_cast<double>(b) / buckets;
            q.bounds[c] = Interval{lo, hi};
            r.cols[c] = {lo, hi};
        }
        CHECK(hist->estimate(q) == doctest::Approx(oracle::selectivity(rows, r)).epsilon(1e-12));
    }
}

TEST_CASE("histogram refuses cell counts beyond the memory cap") {
    Dataset ds = generate_gaussian({.dims = 10, .rows = 100, .correlation = 0.0, .seed = 1});
    CHECK_THROWS_WITH_AS(build_grid_histogram(ds, 8, 1u << 22), doctest::Contains("buckets"),
                         std::invalid_argument);
}

TEST_CASE("full-table sample reproduces the oracle exactly") {
    Dataset ds = grid_dataset();
    auto sample = build_sampling_estimator(ds, ds.rows(), 5);
    CHECK(sample->sample_size() == ds.rows());

    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        RangeQuery q;
        q.bounds.resize(2);
        const double lo = rng.uniform(0.0, 0.8);
        q.bounds[0] = Interval{lo, rng.uniform(lo, 1.0)};
        if (i % 3 == 0) {
            const double lo2 = rng.uniform(0.0, 0.8);
            q.bounds[1] = Interval{lo2, rng.uniform(lo2, 1.0)};
        }
        CHECK(sample->estimate(q) == true_selectivity(ds, q));
    }
}

TEST_CASE("subsampling tracks the oracle within sampling error") {
    Dataset ds = grid_dataset();
    auto sample = build_sampling_estimator(ds, 500, 6);
    REQUIRE(sample->sample_size() == 500);

    RangeQuery q;
    q.bounds.resize(2);
    q.bounds[0] = Interval{0.2, 0.8};
    const double truth = true_selectivity(ds, q);
    CHECK(sample->estimate(q) == doctest::Approx(truth).epsilon(0.2));
}

TEST_CASE("parametric fit recovers a linear selectivity function") {
    // labels produced by a noiseless linear function of the encoding
    Rng rng(11);
    Workload w;
    w.tag = "train";
    for (int i = 0; i < 400; ++i) {
        RangeQuery q;
        q.bounds.resize(2);
        const double lo = rng.uniform(0.0, 0.5);
        const double hi = rng.uniform(lo, 1.0);
        const double lo2 = rng.uniform(0.0, 0.5);
        const double hi2 = rng.uniform(lo2, 1.0);
        q.bounds[0] = Interval{lo, hi};
        q.bounds[1] = Interval{lo2, hi2};
        const double y = 0.3 + 0.2 * lo - 0.1 * hi + 0.25 * lo2 + 0.05 * hi2;
        w.items.push_back({q, y});
    }

    auto poly = fit_parametric(2, w, 1);
    double worst = 0.0;
    for (const auto& item : w.items)
        worst = std::max(worst, std::fabs(poly->estimate(item.query) - item.selectivity));
    CHECK(worst < 1e-6);
}

TEST_CASE("quadratic features strictly improve the training fit") {
    Dataset ds = grid_dataset();
    WorkloadSpec spec;
    spec.n_queries = 800;
    spec.dims = 2;
    spec.shifting_attribute = 0;
    spec.min_filters = 1;
    spec.max_filters = 2;
    spec.length_bounds = {0.1, 0.7};
    spec.seed = 31;
    Workload w = sample_workload(ds, spec, "train");

    auto rmse = [&](const PolynomialEstimator& p) {
        double acc = 0.0;
        for (const auto& item : w.items) {
            const double d = p.estimate(item.query) - item.selectivity;
            acc += d * d;
        }
        return std::sqrt(acc / w.size());
    };

    auto d1 = fit_parametric(2, w, 1);
    auto d2 = fit_parametric(2, w, 2);
    CHECK(rmse(*d2) < rmse(*d1));
}

TEST_CASE("correction table makes observed queries exact") {
    Dataset ds = grid_dataset();
    auto hist = std::shared_ptr<const GridHistogramEstimator>(build_grid_histogram(ds, 3));

    WorkloadSpec spec;
    spec.n_queries = 40;
    spec.dims = 2;
    spec.shifting_attribute = 0;
    spec.min_filters = 1;
    spec.max_filters = 2;
    // centers interior so no interval clips to the domain edge: clipping
    // would pile several observations onto the shared key 1.0
    spec.center_bounds = {0.3, 0.7};
    spec.other_center_bounds = {0.3, 0.7};
    spec.length_bounds = {0.2, 0.6};
    spec.seed = 41;
    Workload observed = sample_workload(ds, spec, "train");

    auto leo = build_leo(hist, observed, 0);

    // keys are now unique with probability 1; every observed query must be
    // reproduced exactly because its stored ratio cancels the histogram error
    for (const auto& item : observed.items) {
        CHECK(leo->estimate(item.query) ==
              doctest::Approx(item.selectivity).epsilon(1e-9));
    }
}

TEST_CASE("without observations the correction defaults to ratio 1") {
    Dataset ds = grid_dataset();
    auto hist = std::shared_ptr<const GridHistogramEstimator>(build_grid_histogram(ds, 3));
    Workload empty;
    empty.tag = "train";
    auto leo = build_leo(hist, empty, 0);

    RangeQuery q;
    q.bounds.resize(2);
    q.bounds[0] = Interval{0.2, 0.7};
    CHECK(leo->estimate(q) == hist->estimate(q));
}

TEST_CASE("correction ratios interpolate linearly between keys") {
    Dataset ds = grid_dataset();
    auto hist = std::shared_ptr<const GridHistogramEstimator>(build_grid_histogram(ds, 3));
    LeoEstimator leo(hist, 0, {0.2, 0.6}, {1.0, 3.0});

    CHECK(leo.ratio_at(0.2) == 1.0);
    CHECK(leo.ratio_at(0.6) == 3.0);
    CHECK(leo.ratio_at(0.4) == doctest::Approx(2.0).epsilon(1e-12));
    // clamped outside the observed key range
    CHECK(leo.ratio_at(0.05) == 1.0);
    CHECK(leo.ratio_at(0.9) == 3.0);
}

TEST_CASE("one-sided corrections aggregated per vertex stay additive") {
    // Freeze the correction table, lift it into a point function over the
    // adjusted axis, and check the signed vertex aggregation splits cleanly.
    Dataset ds = grid_dataset();
    auto hist = std::shared_ptr<const GridHistogramEstimator>(build_grid_histogram(ds, 4));
    LeoEstimator leo(hist, 0, {0.3, 0.8}, {1.4, 0.7});

    auto point_fn = [&](double x0, double x1) {
        const double c[] = {x0, x1};
        return hist->cdf_at(c) * leo.ratio_at(x0);
    };

    Rng rng(55);
    for (int i = 0; i < 50; ++i) {
        const double lo = rng.uniform(0.05, 0.5);
        const double hi = rng.uniform(lo + 0.05, 1.0);
        const double mid = rng.uniform(lo + 0.01, hi - 0.01);
        const double y_lo = rng.uniform(0.05, 0.5);
        const double y_hi = rng.uniform(y_lo + 0.05, 1.0);

        auto agg = [&](double a, double b) {
            return point_fn(b, y_hi) - point_fn(a, y_hi) - point_fn(b, y_lo) + point_fn(a, y_lo);
        };
        const double whole = agg(lo, hi);
        const double parts = agg(lo, mid) + agg(mid, hi);
        CHECK(whole == doctest::Approx(parts).epsilon(1e-9));
    }
}
