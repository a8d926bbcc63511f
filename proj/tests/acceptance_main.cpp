// Acceptance suite: one criterion per line, pinned tolerances, fixed seeds.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "rangesel/experiment.hpp"
#include "rangesel/expansion.hpp"
#include "rangesel/measure_check.hpp"
#include "rangesel/metrics.hpp"
#include "rangesel/mlp.hpp"
#include "rangesel/nn_estimators.hpp"
#include "rangesel/rng.hpp"
#include "support/oracles.hpp"

using namespace rangesel;

namespace {

struct Outcome {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back("failed: " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

int g_failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& fn) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn(out);
    } catch (const std::exception& e) {
        out.ok = false;
        out.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %s (%.1fs)\n", out.ok ? "PASS" : "FAIL", name.c_str(), secs);
    for (const auto& n : out.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
    if (!out.ok) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- three-point fixture ---------------------------------------------------

void check_fixture(Outcome& out) {
    const auto& rows = three_point_fixture();
    const TabulatedVerdict expected[] = {
        TabulatedVerdict::ProbabilityConsistent,
        TabulatedVerdict::AdditivityViolation,
        TabulatedVerdict::SignedOnly,
        TabulatedVerdict::MonotonicityViolation,
    };
    out.require(rows.size() == 4, "fixture has 4 rows");
    for (std::size_t i = 0; i < rows.size() && i < 4; ++i) {
        const TabulatedVerdict got = classify_three_point_row(rows[i]);
        out.require(got == expected[i], std::string(rows[i].name) + " classified as " +
                                            to_string(got) + ", expected " +
                                            to_string(expected[i]));
    }
}

// ---- vertex expansion ------------------------------------------------------

RangeQuery random_query(Rng& rng, std::size_t dims, bool positive_lo) {
    RangeQuery q;
    q.bounds.resize(dims);
    const std::size_t n_c = 1 + rng.index(dims);
    for (std::size_t pick = 0; pick < n_c; ++pick) {
        std::size_t col = rng.index(dims);
        while (q.bounds[col]) col = (col + 1) % dims;
        const double floor_lo = positive_lo ? 0.01 : 0.0;
        double lo = rng.uniform(floor_lo, 0.9);
        double hi = rng.uniform(lo + 1e-6, 1.0);
        q.bounds[col] = Interval{lo, hi};
    }
    return q;
}

void check_expansion(Outcome& out) {
    // two-column case: the four signed corners of the textbook formula
    RangeQuery q2;
    q2.bounds = {Interval{0.2, 0.7}, Interval{0.1, 0.4}};
    CdfVertexExpansion e2 = expand_query(q2, 2);
    out.require(e2.terms.size() == 4, "2-d expansion has 4 terms");
    auto cdf2 = [](double x, double y) { return x * y * (x + y) / 2.0; };
    const double want = oracle::two_d_corner_sum(cdf2, 0.2, 0.7, 0.1, 0.4);
    const double got = aggregate_expansion(
        e2, [&](std::span<const double> v) { return cdf2(v[0], v[1]); });
    out.require(std::fabs(want - got) < 1e-15,
                "2-d aggregate " + fmt(got) + " != corner sum " + fmt(want));
    int sign_by_corner[2][2] = {{0, 0}, {0, 0}};
    for (const auto& t : e2.terms) {
        const int i = t.coords[0] == 0.7 ? 1 : 0;
        const int j = t.coords[1] == 0.4 ? 1 : 0;
        sign_by_corner[i][j] = t.sign;
    }
    out.require(sign_by_corner[1][1] == 1 && sign_by_corner[0][0] == 1 &&
                    sign_by_corner[0][1] == -1 && sign_by_corner[1][0] == -1,
                "2-d corner signs are (+,-,-,+)");

    Rng rng(derive_seed(2024, "expansion-acceptance"));
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t dims = 1 + rng.index(8);
        RangeQuery q = random_query(rng, dims, true);
        CdfVertexExpansion e = expand_query(q, dims);
        const std::size_t n_c = q.n_constrained();
        if (e.terms.size() != (std::size_t{1} << n_c)) {
            out.require(false, "case " + std::to_string(rep) + ": term count " +
                                   std::to_string(e.terms.size()) + " != 2^" +
                                   std::to_string(n_c));
            return;
        }
        long sum = 0;
        for (const auto& t : e.terms) sum += t.sign;
        if (sum != 0) {
            out.require(false, "case " + std::to_string(rep) + ": signs sum to " +
                                   std::to_string(sum));
            return;
        }
    }
    out.note("10000 random expansions: term count 2^k, signs cancel");
}

// ---- cdf estimator additivity ----------------------------------------------

void check_cdf_additivity(Outcome& out) {
    Rng rng(derive_seed(2024, "cdf-additivity"));
    double max_resid = 0.0;
    int cases = 0;
    for (int m = 0; m < 40 && cases < 1000; ++m) {
        const std::size_t dims = 2 + rng.index(5);
        const std::vector<std::size_t> hidden{4 + rng.index(12), 4 + rng.index(12)};
        CdfNnEstimator est(MlpModel(dims, hidden, OutputActivation::Sigmoid, rng.next_u64()));
        for (int k = 0; k < 25 && cases < 1000; ++k, ++cases) {
            RangeQuery q = random_query(rng, dims, false);
            const auto idx = q.constrained_indices();
            const std::size_t axis = idx[rng.index(idx.size())];
            const Interval iv = *q.bounds[axis];
            const double split = rng.uniform(iv.lo + 1e-9, iv.hi - 1e-9);
            RangeQuery left = q, right = q;
            left.bounds[axis] = Interval{iv.lo, split};
            right.bounds[axis] = Interval{split, iv.hi};
            const double resid =
                std::fabs(est.estimate(q) - est.estimate(left) - est.estimate(right));
            max_resid = std::max(max_resid, resid);
        }
    }
    out.require(cases == 1000, "1000 cases executed");
    out.require(max_resid <= 1e-5, "max split residual " + fmt(max_resid) + " > 1e-5");
    out.note("max split residual " + fmt(max_resid) + " over 1000 cases");
}

// ---- gradients ---------------------------------------------------------------

// Central differences straddle the ReLU kink when a hidden pre-activation sits
// within the probe step of zero; the loss is not differentiable there, so the
// comparison says nothing about the analytic gradient. A margin of 1e-3 is
// over 8x the largest pre-activation shift a single-parameter probe of
// h = 1e-5 can induce in these nets (inputs in (0,1), Glorot weights).
bool kink_free(const MlpModel& m, const std::vector<TrainSample>& batch) {
    MlpWorkspace ws;
    for (const auto& s : batch) {
        m.forward(s.x, ws);
        for (std::size_t l = 0; l + 1 < ws.pre.size(); ++l)
            for (double p : ws.pre[l])
                if (std::fabs(p) < 1e-3) return false;
    }
    return true;
}

void check_gradients(Outcome& out) {
    Rng rng(derive_seed(2024, "gradient-acceptance"));
    double worst = 0.0;
    std::size_t batch_redraws = 0, net_redraws = 0;
    for (int net = 0; net < 100; ++net) {
        const bool mse = net % 2 == 0;
        const LossKind loss = mse ? LossKind::Mse : LossKind::Msle;
        const OutputActivation head = mse ? OutputActivation::Sigmoid : OutputActivation::Identity;

        // Zero-initialized biases make an entirely inactive first layer pin
        // every second-layer pre-activation at exactly zero, so some nets
        // have no differentiable probe point anywhere near the input cube.
        // Those get redrawn along with the batch.
        MlpModel model;
        std::vector<TrainSample> batch(4);
        bool clean = false;
        for (int draw = 0; draw < 50 && !clean; ++draw) {
            const std::size_t input = 2 + rng.index(6);
            const std::vector<std::size_t> hidden{3 + rng.index(8), 3 + rng.index(8)};
            model = MlpModel(input, hidden, head, rng.next_u64());
            if (draw > 0) ++net_redraws;
            for (int attempt = 0; attempt < 50 && !clean; ++attempt) {
                for (auto& s : batch) {
                    s.x.resize(input);
                    for (auto& v : s.x) v = rng.uniform();
                    s.y = rng.uniform(0.01, 1.0);
                }
                clean = kink_free(model, batch);
                if (!clean) ++batch_redraws;
            }
        }
        out.require(clean, "net " + std::to_string(net) + ": no kink-free configuration found");
        if (!clean) return;
        const std::vector<double> ga = analytic_gradient(model, batch, loss, 1e-4);
        const std::vector<double> gf = finite_difference_gradient(model, batch, loss, 1e-4);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < ga.size(); ++i) {
            num += (ga[i] - gf[i]) * (ga[i] - gf[i]);
            den += gf[i] * gf[i];
        }
        const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
        worst = std::max(worst, rel);
        if (rel > 1e-4) {
            out.require(false, "net " + std::to_string(net) + " (" + to_string(loss) +
                                   "): relative gradient error " + fmt(rel));
            return;
        }
    }
    out.note("worst relative error " + fmt(worst) + " over 100 nets, losses mse and msle");
    out.note(std::to_string(batch_redraws) + " batch and " + std::to_string(net_redraws) +
             " net redraws to probe away from relu kinks");
}

// ---- selectivity oracle ------------------------------------------------------

void check_oracle(Outcome& out) {
    GaussianSpec gspec;
    gspec.dims = 5;
    gspec.rows = 1000;
    gspec.correlation = 0.5;
    gspec.seed = derive_seed(2024, "oracle-data");
    Dataset ds = generate_gaussian(gspec);

    std::vector<std::vector<double>> rows(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        auto row = ds.row(r);
        rows[r].assign(row.begin(), row.end());
    }

    WorkloadSpec wspec;
    wspec.n_queries = 1000;
    wspec.dims = 5;
    wspec.min_filters = 1;
    wspec.max_filters = 0;
    wspec.length_bounds = {0.05, 0.9};
    wspec.other_length_bounds = {0.05, 0.9};
    wspec.seed = derive_seed(2024, "oracle-queries");

    std::size_t mismatches = 0;
    for (const RangeQuery& q : sample_queries(wspec)) {
        oracle::Range r;
        r.cols.resize(q.bounds.size());
        for (std::size_t c = 0; c < q.bounds.size(); ++c)
            if (q.bounds[c]) r.cols[c] = std::make_pair(q.bounds[c]->lo, q.bounds[c]->hi);
        if (true_selectivity(ds, q) != oracle::selectivity(rows, r)) ++mismatches;
    }
    out.require(mismatches == 0, std::to_string(mismatches) + " of 1000 queries disagree");
    out.note("1000 queries x 1000 rows, exact equality");
}

// ---- coverage ratio references -----------------------------------------------

void check_coverage_ratio(Outcome& out) {
    WorkloadSpec base;
    base.dims = 2;
    base.shifting_attribute = 0;
    base.min_filters = 1;
    base.max_filters = 1;
    base.seed = derive_seed(2024, "coverage-acceptance");

    const std::size_t grid = 101, samples = 200000;

    auto [cm_train, cm_test] = reference_center_move_specs(base);
    const double c2_move = estimate_c2(cm_train, cm_test, grid, samples);
    out.require(std::fabs(c2_move - oracle::kCenterMoveRatio) <= 0.1 * oracle::kCenterMoveRatio,
                "center move ratio " + fmt(c2_move) + " outside 2.0 +/- 10%");

    auto [gr_train, gr_test] = reference_granularity_specs(base);
    const double c2_gran = estimate_c2(gr_train, gr_test, grid, samples);
    out.require(std::fabs(c2_gran - oracle::kGranularityRatio) <= 0.1 * oracle::kGranularityRatio,
                "granularity ratio " + fmt(c2_gran) + " outside 5.0 +/- 10%");

    const double c2_same = estimate_c2(cm_train, cm_train, grid, samples);
    out.require(std::fabs(c2_same - 1.0) <= 0.05, "identical specs ratio " + fmt(c2_same) +
                                                      " outside 1.0 +/- 5%");
    out.note("center move " + fmt(c2_move) + ", granularity " + fmt(c2_gran) + ", identical " +
             fmt(c2_same) + " (200000 samples each)");
}

// ---- alignment inequality ------------------------------------------------------

void check_alignment(Outcome& out) {
    for (double delta : {-5.0, -1.0, 0.0, 0.5, 1.0, 5.0}) {
        AlignmentCheck chk = verify_alignment_example(delta);
        out.require(chk.holds, "inequality fails at delta " + fmt(delta) + ": signed " +
                                   fmt(chk.signed_term) + " < half of absolute " +
                                   fmt(chk.absolute_term));
        const double want_signed = oracle::alignment_signed_term(delta);
        const double want_abs = oracle::alignment_absolute_term(delta);
        out.require(std::fabs(chk.signed_term - want_signed) <= 1e-3 * std::max(1.0, want_signed),
                    "signed term at delta " + fmt(delta) + ": " + fmt(chk.signed_term) +
                        " != closed form " + fmt(want_signed));
        out.require(std::fabs(chk.absolute_term - want_abs) <= 1e-3 * std::max(1.0, want_abs),
                    "absolute term at delta " + fmt(delta) + ": " + fmt(chk.absolute_term) +
                        " != closed form " + fmt(want_abs));
    }
    out.note("holds with factor 1/2 at delta in {-5, -1, 0, 0.5, 1, 5}");
}

// ---- desk-scale generalization ------------------------------------------------

ExperimentConfig desk_config() {
    ExperimentConfig cfg;
    cfg.seed = 42;
    cfg.output_dir = "";  // evaluated in memory
    cfg.dataset.dims = 10;
    cfg.dataset.rows = 50000;
    cfg.dataset.correlation = 0.8;

    cfg.workload.n_train = 20000;
    cfg.workload.n_test = 5000;
    cfg.workload.min_filters = 1;
    cfg.workload.max_filters = 4;
    cfg.workload.length_bounds = {0.05, 0.25};
    cfg.workload.ood_scenario = OodScenario::GranularityShift;
    cfg.workload.ood_length_bounds = {0.55, 0.9};
    cfg.workload.c2_samples = 200000;

    cfg.estimators.clear();
    EstimatorConfig direct;
    direct.name = "direct";
    direct.kind = "direct";
    direct.loss = "msle";
    direct.hidden = {64, 64};
    direct.epochs = 60;
    cfg.estimators.push_back(direct);

    EstimatorConfig cdf;
    cdf.name = "cdf";
    cdf.kind = "cdf";
    cdf.loss = "mse";
    cdf.hidden = {64, 64};
    cdf.epochs = 40;
    cfg.estimators.push_back(cdf);

    EstimatorConfig selfcon;
    selfcon.name = "selfcon";
    selfcon.kind = "selfcon";
    selfcon.loss = "msle";
    selfcon.hidden = {64, 64};
    selfcon.epochs = 40;
    selfcon.omega1 = 1.0;
    selfcon.omega2 = 1.0;
    selfcon.consistency_batch = 64;
    cfg.estimators.push_back(selfcon);

    EstimatorConfig hist;
    hist.name = "hist";
    hist.kind = "hist";
    hist.buckets = 3;
    cfg.estimators.push_back(hist);

    EstimatorConfig poly;
    poly.name = "poly";
    poly.kind = "poly";
    poly.degree = 2;
    cfg.estimators.push_back(poly);

    return cfg;
}

const EvalReport& find_row(const PipelineResult& res, const std::string& name,
                           const std::string& tag) {
    for (const auto& r : res.eval_rows)
        if (r.estimator == name && r.workload_tag == tag) return r;
    throw std::runtime_error("missing eval row " + name + "/" + tag);
}

const MeasureCheckReport& find_measure(const PipelineResult& res, const std::string& name) {
    for (const auto& r : res.measure)
        if (r.estimator == name) return r;
    throw std::runtime_error("missing measure report " + name);
}

// Shared across the generalization, measure-pattern and determinism criteria
// so training happens once per pipeline execution.
PipelineResult g_run_a;
PipelineResult g_run_b;

void check_generalization(Outcome& out) {
    const ExperimentConfig cfg = desk_config();
    g_run_a = run_pipeline(cfg, false);

    const EvalReport& d_in = find_row(g_run_a, "direct", "test_indist");
    const EvalReport& d_ood = find_row(g_run_a, "direct", "test_ood");
    const EvalReport& c_ood = find_row(g_run_a, "cdf", "test_ood");
    const EvalReport& s_in = find_row(g_run_a, "selfcon", "test_indist");
    const EvalReport& s_ood = find_row(g_run_a, "selfcon", "test_ood");

    out.require(d_in.qerror_tier != Tier::ZeroStar,
                "direct in-dist qerror tier is " + tier_name(d_in.qerror_tier) + " (median " +
                    fmt(d_in.qerror_median) + ")");
    out.require(d_ood.rmse >= 2.0 * d_in.rmse,
                "direct rmse degradation " + fmt(d_ood.rmse / d_in.rmse) + "x < 2x");
    out.require(c_ood.rmse < d_ood.rmse, "cdf ood rmse " + fmt(c_ood.rmse) +
                                             " not below direct ood rmse " + fmt(d_ood.rmse));
    out.require(s_ood.qerror_median < d_ood.qerror_median,
                "selfcon ood median qerror " + fmt(s_ood.qerror_median) +
                    " not below direct's " + fmt(d_ood.qerror_median));
    out.require(s_in.qerror_median <= 1.5 * d_in.qerror_median,
                "selfcon in-dist median qerror " + fmt(s_in.qerror_median) + " exceeds 1.5x " +
                    fmt(d_in.qerror_median));

    out.note("coverage ratio " + fmt(g_run_a.workloads.c2));
    out.note("direct: in-dist median qerror " + fmt(d_in.qerror_median) + " (tier " +
             tier_name(d_in.qerror_tier) + "), rmse " + fmt(d_in.rmse) + " -> ood " +
             fmt(d_ood.rmse) + " (" + fmt(d_ood.rmse / d_in.rmse) + "x)");
    out.note("cdf ood rmse " + fmt(c_ood.rmse) + "; selfcon median qerror in " +
             fmt(s_in.qerror_median) + ", ood " + fmt(s_ood.qerror_median) + " vs direct ood " +
             fmt(d_ood.qerror_median));
}

void check_measure_pattern(Outcome& out) {
    if (g_run_a.eval_rows.empty()) {
        out.require(false, "pipeline run unavailable (generalization criterion crashed)");
        return;
    }
    const auto frac_add = [](const MeasureCheckReport& r) {
        return static_cast<double>(r.additivity.n_violations) /
               static_cast<double>(r.additivity.n_triples);
    };
    const auto frac_mono = [](const MeasureCheckReport& r) {
        const auto pairs = r.monotonicity.n_chains * 49;  // 50 points per chain
        return static_cast<double>(r.monotonicity.n_inversions) / static_cast<double>(pairs);
    };

    const MeasureCheckReport& direct = find_measure(g_run_a, "direct");
    const MeasureCheckReport& poly = find_measure(g_run_a, "poly");
    const MeasureCheckReport& hist = find_measure(g_run_a, "hist");
    const MeasureCheckReport& cdf = find_measure(g_run_a, "cdf");

    for (const auto* r : {&direct, &poly}) {
        out.require(frac_add(*r) >= 0.01, r->estimator + " additivity violations " +
                                              fmt(100.0 * frac_add(*r)) + "% < 1%");
        out.require(frac_mono(*r) >= 0.01, r->estimator + " monotonicity inversions " +
                                               fmt(100.0 * frac_mono(*r)) + "% < 1%");
    }
    out.require(hist.additivity.passed() && hist.monotonicity.passed(),
                "hist violates a check (additivity " +
                    std::to_string(hist.additivity.n_violations) + ", inversions " +
                    std::to_string(hist.monotonicity.n_inversions) + ")");
    out.require(cdf.additivity.passed(), "cdf additivity violations " +
                                             std::to_string(cdf.additivity.n_violations));

    out.note("additivity violation rate: direct " + fmt(100.0 * frac_add(direct)) + "%, poly " +
             fmt(100.0 * frac_add(poly)) + "%, hist 0 required, cdf 0 required");
    out.note("monotonicity inversion rate: direct " + fmt(100.0 * frac_mono(direct)) +
             "%, poly " + fmt(100.0 * frac_mono(poly)) + "%");
}

void check_determinism(Outcome& out) {
    if (g_run_a.eval_rows.empty()) {
        out.require(false, "pipeline run unavailable (generalization criterion crashed)");
        return;
    }
    g_run_b = run_pipeline(desk_config(), false);
    out.require(g_run_a.eval_json == g_run_b.eval_json, "evaluation reports differ across runs");
    out.require(g_run_a.measure_json == g_run_b.measure_json,
                "measure reports differ across runs");
    out.note("evaluation and measure reports byte-identical across two pipeline executions");
}

}  // namespace

int main() {
    std::printf("acceptance suite, fixed seeds, single process\n\n");

    criterion("1. three-point fixture classification (exact)", check_fixture);
    criterion("2. vertex expansion structure (10000 cases)", check_expansion);
    criterion("3. cdf estimator split additivity <= 1e-5 (1000 cases)", check_cdf_additivity);
    criterion("4. analytic vs numeric gradients <= 1e-4 (100 nets)", check_gradients);
    criterion("5. selectivity oracle equivalence (1000 x 1000, exact)", check_oracle);
    criterion("6. coverage ratio references (2.0, 5.0, 1.0)", check_coverage_ratio);
    criterion("7. signed-vs-absolute alignment inequality (quadrature)", check_alignment);
    criterion("8. ood generalization pattern (10-d, 50k rows, 20k queries)",
              check_generalization);
    criterion("9. measure-check failure pattern (direct, poly vs hist, cdf)",
              check_measure_pattern);
    criterion("10. pipeline determinism (second full run)", check_determinism);

    std::printf("\n%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
