#include "rangesel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "rangesel/checkpoint.hpp"
#include "rangesel/io_util.hpp"
#include "rangesel/rng.hpp"

namespace rangesel {

namespace fs = std::filesystem;
using nlohmann::json;

OodScenario scenario_from_string(const std::string& s) {
    if (s == "none") return OodScenario::None;
    if (s == "center-move") return OodScenario::CenterMove;
    if (s == "granularity-shift") return OodScenario::GranularityShift;
    throw std::invalid_argument("unknown ood scenario \"" + s +
                                "\" (expected none, center-move or granularity-shift)");
}

std::string to_string(OodScenario s) {
    switch (s) {
        case OodScenario::None: return "none";
        case OodScenario::CenterMove: return "center-move";
        case OodScenario::GranularityShift: return "granularity-shift";
    }
    throw std::invalid_argument("unhandled ood scenario value");
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;

    EstimatorConfig direct;
    direct.name = "direct";
    direct.kind = "direct";
    direct.loss = "msle";
    cfg.estimators.push_back(direct);

    EstimatorConfig cdf;
    cdf.name = "cdf";
    cdf.kind = "cdf";
    cdf.loss = "mse";
    cfg.estimators.push_back(cdf);

    EstimatorConfig selfcon;
    selfcon.name = "selfcon";
    selfcon.kind = "selfcon";
    selfcon.loss = "msle";
    selfcon.omega1 = 1.0;
    selfcon.omega2 = 1.0;
    cfg.estimators.push_back(selfcon);

    // At 13 columns the node grid is (buckets + 1)^13; 2 buckets per
    // dimension is the widest that fits the cell budget.
    EstimatorConfig hist;
    hist.name = "hist";
    hist.kind = "hist";
    hist.buckets = 2;
    cfg.estimators.push_back(hist);

    EstimatorConfig sample;
    sample.name = "sample";
    sample.kind = "sample";
    sample.sample_size = 1000;
    cfg.estimators.push_back(sample);

    EstimatorConfig poly;
    poly.name = "poly";
    poly.kind = "poly";
    poly.degree = 2;
    cfg.estimators.push_back(poly);

    EstimatorConfig leo;
    leo.name = "leo";
    leo.kind = "leo";
    leo.buckets = 2;
    cfg.estimators.push_back(leo);

    return cfg;
}

namespace {

json bounds_to_json(const Bounds& b) { return json::array({b.lo, b.hi}); }

Bounds bounds_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument(where + " must be a [lo, hi] number pair");
    return Bounds{j[0].get<double>(), j[1].get<double>()};
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("unknown " + where + " key \"" + it.key() + "\"");
}

json dataset_to_json(const DatasetConfig& d) {
    json j;
    j["kind"] = d.kind;
    j["dims"] = d.dims;
    j["rows"] = d.rows;
    j["correlation"] = d.correlation;
    j["csv_path"] = d.csv_path;
    j["csv_has_header"] = d.csv_has_header;
    return j;
}

DatasetConfig dataset_from_json(const json& j) {
    reject_unknown_keys(j, {"kind", "dims", "rows", "correlation", "csv_path", "csv_has_header"},
                        "dataset config");
    DatasetConfig d;
    d.kind = j.value("kind", d.kind);
    d.dims = j.value("dims", d.dims);
    d.rows = j.value("rows", d.rows);
    d.correlation = j.value("correlation", d.correlation);
    d.csv_path = j.value("csv_path", d.csv_path);
    d.csv_has_header = j.value("csv_has_header", d.csv_has_header);
    return d;
}

json workload_to_json(const WorkloadConfig& w) {
    json j;
    j["n_train"] = w.n_train;
    j["n_test"] = w.n_test;
    j["shifting_attribute"] = w.shifting_attribute;
    j["min_filters"] = w.min_filters;
    j["max_filters"] = w.max_filters;
    j["center_bounds"] = bounds_to_json(w.center_bounds);
    j["length_bounds"] = bounds_to_json(w.length_bounds);
    j["other_center_bounds"] = bounds_to_json(w.other_center_bounds);
    j["other_length_bounds"] = bounds_to_json(w.other_length_bounds);
    j["ood_scenario"] = to_string(w.ood_scenario);
    j["ood_center_bounds"] = bounds_to_json(w.ood_center_bounds);
    j["ood_length_bounds"] = bounds_to_json(w.ood_length_bounds);
    j["c2_grid_points"] = w.c2_grid_points;
    j["c2_samples"] = w.c2_samples;
    return j;
}

WorkloadConfig workload_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"n_train", "n_test", "shifting_attribute", "min_filters", "max_filters",
                         "center_bounds", "length_bounds", "other_center_bounds",
                         "other_length_bounds", "ood_scenario", "ood_center_bounds",
                         "ood_length_bounds", "c2_grid_points", "c2_samples"},
                        "workload config");
    WorkloadConfig w;
    w.n_train = j.value("n_train", w.n_train);
    w.n_test = j.value("n_test", w.n_test);
    w.shifting_attribute = j.value("shifting_attribute", w.shifting_attribute);
    w.min_filters = j.value("min_filters", w.min_filters);
    w.max_filters = j.value("max_filters", w.max_filters);
    if (j.contains("center_bounds")) w.center_bounds = bounds_from_json(j["center_bounds"], "center_bounds");
    if (j.contains("length_bounds")) w.length_bounds = bounds_from_json(j["length_bounds"], "length_bounds");
    if (j.contains("other_center_bounds"))
        w.other_center_bounds = bounds_from_json(j["other_center_bounds"], "other_center_bounds");
    if (j.contains("other_length_bounds"))
        w.other_length_bounds = bounds_from_json(j["other_length_bounds"], "other_length_bounds");
    if (j.contains("ood_scenario")) w.ood_scenario = scenario_from_string(j["ood_scenario"].get<std::string>());
    if (j.contains("ood_center_bounds"))
        w.ood_center_bounds = bounds_from_json(j["ood_center_bounds"], "ood_center_bounds");
    if (j.contains("ood_length_bounds"))
        w.ood_length_bounds = bounds_from_json(j["ood_length_bounds"], "ood_length_bounds");
    w.c2_grid_points = j.value("c2_grid_points", w.c2_grid_points);
    w.c2_samples = j.value("c2_samples", w.c2_samples);
    return w;
}

json estimator_to_json_cfg(const EstimatorConfig& e) {
    json j;
    j["name"] = e.name;
    j["kind"] = e.kind;
    j["loss"] = e.loss;
    j["optimizer"] = e.optimizer;
    j["hidden"] = e.hidden;
    j["epochs"] = e.epochs;
    j["batch_size"] = e.batch_size;
    j["learning_rate"] = e.learning_rate;
    j["precompute_expansions"] = e.precompute_expansions;
    j["omega1"] = e.omega1;
    j["omega2"] = e.omega2;
    j["consistency_batch"] = e.consistency_batch;
    j["consistency_length_bounds"] = bounds_to_json(e.consistency_length_bounds);
    j["buckets"] = e.buckets;
    j["sample_size"] = e.sample_size;
    j["degree"] = e.degree;
    return j;
}

EstimatorConfig estimator_from_json_cfg(const json& j) {
    reject_unknown_keys(j,
                        {"name", "kind", "loss", "optimizer", "hidden", "epochs", "batch_size",
                         "learning_rate", "precompute_expansions", "omega1", "omega2",
                         "consistency_batch", "consistency_length_bounds", "buckets",
                         "sample_size", "degree"},
                        "estimator config");
    EstimatorConfig e;
    e.name = j.value("name", e.name);
    e.kind = j.value("kind", e.kind);
    e.loss = j.value("loss", e.loss);
    e.optimizer = j.value("optimizer", e.optimizer);
    if (j.contains("hidden")) e.hidden = j["hidden"].get<std::vector<std::size_t>>();
    e.epochs = j.value("epochs", e.epochs);
    e.batch_size = j.value("batch_size", e.batch_size);
    e.learning_rate = j.value("learning_rate", e.learning_rate);
    e.precompute_expansions = j.value("precompute_expansions", e.precompute_expansions);
    e.omega1 = j.value("omega1", e.omega1);
    e.omega2 = j.value("omega2", e.omega2);
    e.consistency_batch = j.value("consistency_batch", e.consistency_batch);
    if (j.contains("consistency_length_bounds"))
        e.consistency_length_bounds =
            bounds_from_json(j["consistency_length_bounds"], "consistency_length_bounds");
    e.buckets = j.value("buckets", e.buckets);
    e.sample_size = j.value("sample_size", e.sample_size);
    e.degree = j.value("degree", e.degree);
    return e;
}

json measure_to_json(const MeasureCheckConfig& m) {
    json j;
    j["triples"] = m.triples;
    j["chains"] = m.chains;
    j["chain_points"] = m.chain_points;
    j["additivity_tolerance"] = m.additivity_tolerance;
    j["monotonicity_tolerance"] = m.monotonicity_tolerance;
    return j;
}

MeasureCheckConfig measure_from_json(const json& j) {
    reject_unknown_keys(
        j, {"triples", "chains", "chain_points", "additivity_tolerance", "monotonicity_tolerance"},
        "measure config");
    MeasureCheckConfig m;
    m.triples = j.value("triples", m.triples);
    m.chains = j.value("chains", m.chains);
    m.chain_points = j.value("chain_points", m.chain_points);
    m.additivity_tolerance = j.value("additivity_tolerance", m.additivity_tolerance);
    m.monotonicity_tolerance = j.value("monotonicity_tolerance", m.monotonicity_tolerance);
    return m;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["clip_floor"] = cfg.clip_floor;
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["workload"] = workload_to_json(cfg.workload);
    j["estimators"] = json::array();
    for (const auto& e : cfg.estimators) j["estimators"].push_back(estimator_to_json_cfg(e));
    j["measure"] = measure_to_json(cfg.measure);
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    reject_unknown_keys(
        j, {"seed", "output_dir", "clip_floor", "dataset", "workload", "estimators", "measure"},
        "config");

    ExperimentConfig cfg;
    cfg.estimators.clear();
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.clip_floor = j.value("clip_floor", cfg.clip_floor);
    if (j.contains("dataset")) cfg.dataset = dataset_from_json(j["dataset"]);
    if (j.contains("workload")) cfg.workload = workload_from_json(j["workload"]);
    if (j.contains("estimators")) {
        if (!j["estimators"].is_array())
            throw std::invalid_argument("estimators must be an array");
        for (const auto& e : j["estimators"]) cfg.estimators.push_back(estimator_from_json_cfg(e));
    }
    if (j.contains("measure")) cfg.measure = measure_from_json(j["measure"]);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_json_text(read_file(path));
}

std::string config_hash(const ExperimentConfig& cfg) { return hex_digest(config_to_json(cfg)); }

std::uint64_t component_seed(const ExperimentConfig& cfg, const std::string& role) {
    return derive_seed(cfg.seed, role);
}

Dataset build_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == "gaussian") {
        GaussianSpec spec;
        spec.dims = cfg.dataset.dims;
        spec.rows = cfg.dataset.rows;
        spec.correlation = cfg.dataset.correlation;
        spec.seed = component_seed(cfg, "dataset");
        return generate_gaussian(spec);
    }
    if (cfg.dataset.kind == "csv") {
        if (cfg.dataset.csv_path.empty())
            throw std::invalid_argument("dataset kind csv needs csv_path");
        return load_csv(cfg.dataset.csv_path, cfg.dataset.csv_has_header);
    }
    throw std::invalid_argument("unknown dataset kind \"" + cfg.dataset.kind +
                                "\" (expected gaussian or csv)");
}

namespace {

WorkloadSpec base_spec(const ExperimentConfig& cfg, std::size_t dims) {
    WorkloadSpec s;
    s.dims = dims;
    s.shifting_attribute = cfg.workload.shifting_attribute;
    s.min_filters = cfg.workload.min_filters;
    s.max_filters = cfg.workload.max_filters;
    s.center_bounds = cfg.workload.center_bounds;
    s.length_bounds = cfg.workload.length_bounds;
    s.other_center_bounds = cfg.workload.other_center_bounds;
    s.other_length_bounds = cfg.workload.other_length_bounds;
    return s;
}

}  // namespace

WorkloadBundle build_workloads(const ExperimentConfig& cfg, const Dataset& ds) {
    const std::uint64_t wseed = component_seed(cfg, "workload");
    WorkloadBundle b;

    b.train_spec = base_spec(cfg, ds.dims());
    b.train_spec.n_queries = cfg.workload.n_train;
    b.train_spec.seed = derive_seed(wseed, "train");

    b.test_in_spec = base_spec(cfg, ds.dims());
    b.test_in_spec.n_queries = cfg.workload.n_test;
    b.test_in_spec.seed = derive_seed(wseed, "test-in");

    b.test_ood_spec = base_spec(cfg, ds.dims());
    b.test_ood_spec.n_queries = cfg.workload.n_test;
    b.test_ood_spec.seed = derive_seed(wseed, "test-ood");
    switch (cfg.workload.ood_scenario) {
        case OodScenario::None: break;
        case OodScenario::CenterMove:
            b.test_ood_spec.center_bounds = cfg.workload.ood_center_bounds;
            break;
        case OodScenario::GranularityShift:
            b.test_ood_spec.length_bounds = cfg.workload.ood_length_bounds;
            break;
    }

    b.train = sample_workload(ds, b.train_spec, "train");
    b.test_in = sample_disjoint(ds, b.test_in_spec, b.train, "test_indist");
    b.test_ood = sample_disjoint(ds, b.test_ood_spec, b.train, "test_ood");

    b.c2 = cfg.workload.ood_scenario == OodScenario::None
               ? 1.0
               : estimate_c2(b.train_spec, b.test_ood_spec, cfg.workload.c2_grid_points,
                             cfg.workload.c2_samples);
    return b;
}

namespace {

double resolve_clip_floor(const ExperimentConfig& cfg, std::size_t rows) {
    if (cfg.clip_floor > 0.0) return cfg.clip_floor;
    if (rows == 0) throw std::invalid_argument("cannot resolve clip floor on an empty dataset");
    return 1.0 / static_cast<double>(rows);
}

NamedEstimator train_one(const ExperimentConfig& cfg, const EstimatorConfig& e, const Dataset& ds,
                         const WorkloadBundle& wl, double clip_floor, ExpansionCache& cache) {
    NamedEstimator out;
    if (e.kind == "direct" || e.kind == "cdf" || e.kind == "selfcon") {
        TrainConfig tc;
        tc.hidden = e.hidden;
        tc.loss = loss_from_string(e.loss);
        tc.optimizer = optimizer_from_string(e.optimizer);
        tc.learning_rate = e.learning_rate;
        tc.epochs = e.epochs;
        tc.batch_size = e.batch_size;
        tc.clip_floor = clip_floor;
        tc.seed = derive_seed(component_seed(cfg, "train"), e.name);

        NnTrainResult r;
        if (e.kind == "direct") {
            r = train_direct(ds.dims(), wl.train, tc);
        } else if (e.kind == "cdf") {
            r = train_cdf_model(ds.dims(), wl.train, tc, e.precompute_expansions, &cache);
        } else {
            SelfConsistencyConfig sc;
            sc.omega1 = e.omega1;
            sc.omega2 = e.omega2;
            sc.consistency_batch = e.consistency_batch;
            sc.consistency_sampler = wl.train_spec;
            sc.consistency_sampler.length_bounds = e.consistency_length_bounds;
            sc.consistency_sampler.other_length_bounds = e.consistency_length_bounds;
            r = train_selfconsistent(ds.dims(), wl.train, tc, sc, &cache);
        }
        out.estimator = std::move(r.estimator);
        out.trace = std::move(r.trace);
    } else if (e.kind == "hist") {
        out.estimator = build_grid_histogram(ds, e.buckets);
    } else if (e.kind == "sample") {
        out.estimator = build_sampling_estimator(
            ds, e.sample_size, derive_seed(component_seed(cfg, "train"), e.name));
    } else if (e.kind == "poly") {
        out.estimator = fit_parametric(ds.dims(), wl.train, e.degree);
    } else if (e.kind == "leo") {
        std::shared_ptr<const GridHistogramEstimator> base = build_grid_histogram(ds, e.buckets);
        out.estimator = build_leo(base, wl.train, cfg.workload.shifting_attribute);
    } else {
        throw std::invalid_argument("unknown estimator kind \"" + e.kind + "\"");
    }
    out.estimator->set_name(e.name);
    return out;
}

std::vector<NamedEstimator> train_all(const ExperimentConfig& cfg, const Dataset& ds,
                                      const WorkloadBundle& wl, double clip_floor) {
    std::set<std::string> names;
    for (const auto& e : cfg.estimators) {
        if (e.name.empty()) throw std::invalid_argument("estimator entries need a name");
        if (!names.insert(e.name).second)
            throw std::invalid_argument("duplicate estimator name \"" + e.name + "\"");
    }
    ExpansionCache cache;
    std::vector<NamedEstimator> out;
    out.reserve(cfg.estimators.size());
    for (const auto& e : cfg.estimators) out.push_back(train_one(cfg, e, ds, wl, clip_floor, cache));
    return out;
}

json eval_row_to_json(const EvalReport& r) {
    json j;
    j["estimator"] = r.estimator;
    j["workload"] = r.workload_tag;
    j["n_queries"] = r.n_queries;
    j["rmse"] = r.rmse;
    j["qerror_median"] = r.qerror_median;
    j["qerror_p90"] = r.qerror_p90;
    j["qerror_max"] = r.qerror_max;
    j["rmse_tier"] = tier_name(r.rmse_tier);
    j["qerror_tier"] = tier_name(r.qerror_tier);
    j["model_calls"] = r.model_calls;
    j["calls_per_query"] = r.calls_per_query;
    return j;
}

std::string render_eval_json(const std::string& hash, const ExperimentConfig& cfg,
                             double clip_floor, double c2,
                             const std::vector<EvalReport>& rows,
                             const std::vector<DegradationSummary>& degradation) {
    json j;
    j["config_hash"] = hash;
    j["clip_floor"] = clip_floor;
    j["ood_scenario"] = to_string(cfg.workload.ood_scenario);
    j["coverage_ratio"] = c2;
    j["rows"] = json::array();
    for (const auto& r : rows) j["rows"].push_back(eval_row_to_json(r));
    j["degradation"] = json::array();
    for (const auto& d : degradation) {
        json dj;
        dj["estimator"] = d.estimator;
        dj["rmse_ratio"] = d.rmse_ratio;
        dj["qerror_median_ratio"] = d.qerror_median_ratio;
        dj["qerror_p90_ratio"] = d.qerror_p90_ratio;
        j["degradation"].push_back(dj);
    }
    return j.dump(2) + "\n";
}

std::string fixed(double v, int prec) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

// Short form for report tables; artifacts keep round-trip precision.
std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string render_eval_text(const std::string& hash, const ExperimentConfig& cfg,
                             double clip_floor, double c2,
                             const std::vector<EvalReport>& rows,
                             const std::vector<DegradationSummary>& degradation) {
    std::ostringstream os;
    os << "run " << hash << "\n";
    os << "ood scenario " << to_string(cfg.workload.ood_scenario) << ", coverage ratio "
       << fixed(c2, 3) << ", clip floor " << sci(clip_floor) << "\n\n";

    os << pad("estimator", 12) << pad("workload", 14) << pad("rmse", 12) << pad("q50", 10)
       << pad("q90", 12) << pad("qmax", 14) << pad("tiers", 8) << "calls/query\n";
    for (const auto& r : rows) {
        os << pad(r.estimator, 12) << pad(r.workload_tag, 14) << pad(fixed(r.rmse, 6), 12)
           << pad(fixed(r.qerror_median, 2), 10) << pad(fixed(r.qerror_p90, 2), 12)
           << pad(fixed(r.qerror_max, 1), 14)
           << pad(tier_symbol(r.rmse_tier) + " " + tier_symbol(r.qerror_tier), 8)
           << fixed(r.calls_per_query, 1) << "\n";
    }
    os << "\n" << pad("estimator", 12) << pad("rmse ood/in", 14) << pad("q50 ood/in", 14)
       << "q90 ood/in\n";
    for (const auto& d : degradation) {
        os << pad(d.estimator, 12) << pad(fixed(d.rmse_ratio, 2), 14)
           << pad(fixed(d.qerror_median_ratio, 2), 14) << fixed(d.qerror_p90_ratio, 2) << "\n";
    }
    return os.str();
}

std::string render_measure_json(const std::string& hash,
                                const std::vector<MeasureCheckReport>& reports) {
    json j;
    j["config_hash"] = hash;
    j["reports"] = json::array();
    for (const auto& r : reports) {
        json rj;
        rj["estimator"] = r.estimator;
        rj["additivity"] = {{"triples", r.additivity.n_triples},
                            {"violations", r.additivity.n_violations},
                            {"max_residual", r.additivity.max_residual},
                            {"tolerance", r.additivity.tolerance},
                            {"passed", r.additivity.passed()}};
        rj["monotonicity"] = {{"chains", r.monotonicity.n_chains},
                              {"chains_with_inversion", r.monotonicity.n_chains_with_inversion},
                              {"inversions", r.monotonicity.n_inversions},
                              {"max_drop", r.monotonicity.max_drop},
                              {"tolerance", r.monotonicity.tolerance},
                              {"passed", r.monotonicity.passed()}};
        j["reports"].push_back(rj);
    }
    return j.dump(2) + "\n";
}

std::string render_measure_text(const std::string& hash,
                                const std::vector<MeasureCheckReport>& reports) {
    std::ostringstream os;
    os << "run " << hash << "\n\n";
    os << pad("estimator", 12) << pad("additivity", 12) << pad("violations", 12)
       << pad("max residual", 16) << pad("monotonicity", 14) << pad("inversions", 12)
       << "max drop\n";
    for (const auto& r : reports) {
        os << pad(r.estimator, 12) << pad(r.additivity.passed() ? "pass" : "FAIL", 12)
           << pad(std::to_string(r.additivity.n_violations) + "/" +
                      std::to_string(r.additivity.n_triples),
                  12)
           << pad(sci(r.additivity.max_residual), 16)
           << pad(r.monotonicity.passed() ? "pass" : "FAIL", 14)
           << pad(std::to_string(r.monotonicity.n_inversions), 12)
           << sci(r.monotonicity.max_drop) << "\n";
    }
    return os.str();
}

// Artifact bookkeeping. The manifest maps artifact names to content digests
// under the run's config hash; a hash change invalidates the whole entry set.
void record_artifacts(const std::string& dir, const std::string& hash,
                      const std::vector<std::string>& names) {
    const std::string path = dir + "/manifest.json";
    json manifest;
    manifest["config_hash"] = hash;
    manifest["artifacts"] = json::object();
    if (fs::exists(path)) {
        try {
            json prev = json::parse(read_file(path));
            if (prev.is_object() && prev.value("config_hash", "") == hash &&
                prev.contains("artifacts") && prev["artifacts"].is_object())
                manifest["artifacts"] = prev["artifacts"];
        } catch (const json::parse_error&) {
            // unreadable manifest: rebuild from scratch
        }
    }
    for (const auto& name : names) {
        const std::string content = read_file(dir + "/" + name);
        manifest["artifacts"][name] = {{"digest", hex_digest(content)},
                                       {"bytes", content.size()}};
    }
    write_file(path, manifest.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

std::string trace_csv(const std::string& hash, const TrainTrace& trace) {
    std::ostringstream os;
    os << "# config_hash " << hash << "\n";
    os << "epoch,loss,loss_min\n";
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.epoch_loss.size(); ++i) {
        best = std::min(best, trace.epoch_loss[i]);
        os << (i + 1) << "," << format_double(trace.epoch_loss[i]) << "," << format_double(best)
           << "\n";
    }
    return os.str();
}

Dataset load_run_dataset(const ExperimentConfig& cfg) {
    const std::string path = cfg.output_dir + "/dataset.csv";
    if (!fs::exists(path))
        throw std::runtime_error("missing " + path + "; run gen-data first");
    return load_csv(path, true);
}

Workload load_run_workload(const ExperimentConfig& cfg, const std::string& stem) {
    const std::string path = cfg.output_dir + "/" + stem + ".jsonl";
    if (!fs::exists(path))
        throw std::runtime_error("missing " + path + "; run gen-workload first");
    return load_workload(path);
}

void write_dataset_artifacts(const ExperimentConfig& cfg, const Dataset& ds) {
    const std::string hash = config_hash(cfg);
    ensure_dir(cfg.output_dir);
    save_csv(ds, cfg.output_dir + "/dataset.csv");

    json meta;
    meta["config_hash"] = hash;
    meta["kind"] = cfg.dataset.kind;
    meta["dims"] = ds.dims();
    meta["rows"] = ds.rows();
    meta["csv_digest"] = hex_digest(read_file(cfg.output_dir + "/dataset.csv"));
    write_file(cfg.output_dir + "/dataset.meta.json", meta.dump(2) + "\n");

    record_artifacts(cfg.output_dir, hash, {"dataset.csv", "dataset.meta.json"});
}

void write_workload_artifacts(const ExperimentConfig& cfg, const WorkloadBundle& wl) {
    const std::string hash = config_hash(cfg);
    ensure_dir(cfg.output_dir);
    save_workload(wl.train, cfg.output_dir + "/workload_train.jsonl");
    save_workload(wl.test_in, cfg.output_dir + "/workload_test_indist.jsonl");
    save_workload(wl.test_ood, cfg.output_dir + "/workload_test_ood.jsonl");

    json meta;
    meta["config_hash"] = hash;
    meta["ood_scenario"] = to_string(cfg.workload.ood_scenario);
    meta["coverage_ratio"] = wl.c2;
    meta["n_train"] = wl.train.size();
    meta["n_test_indist"] = wl.test_in.size();
    meta["n_test_ood"] = wl.test_ood.size();
    write_file(cfg.output_dir + "/workloads.meta.json", meta.dump(2) + "\n");

    record_artifacts(cfg.output_dir, hash,
                     {"workload_train.jsonl", "workload_test_indist.jsonl",
                      "workload_test_ood.jsonl", "workloads.meta.json"});
}

std::vector<std::string> write_estimator_artifacts(const ExperimentConfig& cfg,
                                                   const std::vector<NamedEstimator>& ests) {
    const std::string hash = config_hash(cfg);
    std::vector<std::string> names;
    for (const auto& ne : ests) {
        const std::string ckpt = "ckpt_" + ne.estimator->name() + ".json";
        save_estimator(*ne.estimator, cfg.output_dir + "/" + ckpt, hash);
        names.push_back(ckpt);
        if (!ne.trace.epoch_loss.empty()) {
            const std::string trace = "trace_" + ne.estimator->name() + ".csv";
            write_file(cfg.output_dir + "/" + trace, trace_csv(hash, ne.trace));
            names.push_back(trace);
        }
    }
    return names;
}

double read_coverage_ratio(const ExperimentConfig& cfg) {
    const std::string path = cfg.output_dir + "/workloads.meta.json";
    if (!fs::exists(path))
        throw std::runtime_error("missing " + path + "; run gen-workload first");
    return json::parse(read_file(path)).value("coverage_ratio", 1.0);
}

struct EvalOutcome {
    std::vector<EvalReport> rows;
    std::vector<DegradationSummary> degradation;
};

EvalOutcome evaluate_all(const std::vector<NamedEstimator>& ests, const Workload& test_in,
                         const Workload& test_ood, double clip_floor) {
    EvalOutcome out;
    for (const auto& ne : ests) {
        EvalReport in = evaluate(*ne.estimator, test_in, clip_floor);
        EvalReport ood = evaluate(*ne.estimator, test_ood, clip_floor);
        out.degradation.push_back(compare(in, ood));
        out.rows.push_back(std::move(in));
        out.rows.push_back(std::move(ood));
    }
    return out;
}

std::vector<MeasureCheckReport> measure_all(const ExperimentConfig& cfg,
                                            const std::vector<NamedEstimator>& ests,
                                            const WorkloadSpec& spec) {
    std::vector<MeasureCheckReport> out;
    const std::uint64_t seed = component_seed(cfg, "measure");
    for (const auto& ne : ests)
        out.push_back(run_measure_checks(*ne.estimator, spec, cfg.measure.triples,
                                         cfg.measure.chains, cfg.measure.chain_points, seed,
                                         cfg.measure.additivity_tolerance,
                                         cfg.measure.monotonicity_tolerance));
    return out;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg, bool write_outputs) {
    PipelineResult res;
    res.hash = config_hash(cfg);

    Dataset ds = build_dataset(cfg);
    res.clip_floor = resolve_clip_floor(cfg, ds.rows());
    res.workloads = build_workloads(cfg, ds);
    res.estimators = train_all(cfg, ds, res.workloads, res.clip_floor);

    EvalOutcome eval = evaluate_all(res.estimators, res.workloads.test_in, res.workloads.test_ood,
                                    res.clip_floor);
    res.eval_rows = std::move(eval.rows);
    res.degradation = std::move(eval.degradation);
    res.measure = measure_all(cfg, res.estimators, res.workloads.train_spec);

    res.eval_json = render_eval_json(res.hash, cfg, res.clip_floor, res.workloads.c2,
                                     res.eval_rows, res.degradation);
    res.eval_text = render_eval_text(res.hash, cfg, res.clip_floor, res.workloads.c2,
                                     res.eval_rows, res.degradation);
    res.measure_json = render_measure_json(res.hash, res.measure);
    res.measure_text = render_measure_text(res.hash, res.measure);

    if (write_outputs) {
        ensure_dir(cfg.output_dir);
        write_file(cfg.output_dir + "/config.json", config_to_json(cfg));
        write_dataset_artifacts(cfg, ds);
        write_workload_artifacts(cfg, res.workloads);
        std::vector<std::string> names = write_estimator_artifacts(cfg, res.estimators);
        write_file(cfg.output_dir + "/eval_report.json", res.eval_json);
        write_file(cfg.output_dir + "/eval_report.txt", res.eval_text);
        write_file(cfg.output_dir + "/measure_check.json", res.measure_json);
        write_file(cfg.output_dir + "/measure_check.txt", res.measure_text);
        names.insert(names.end(), {"config.json", "eval_report.json", "eval_report.txt",
                                   "measure_check.json", "measure_check.txt"});
        record_artifacts(cfg.output_dir, res.hash, names);
    }
    return res;
}

void cmd_gen_data(const ExperimentConfig& cfg) {
    ensure_dir(cfg.output_dir);
    write_dataset_artifacts(cfg, build_dataset(cfg));
}

void cmd_gen_workload(const ExperimentConfig& cfg) {
    Dataset ds = load_run_dataset(cfg);
    write_workload_artifacts(cfg, build_workloads(cfg, ds));
}

void cmd_train(const ExperimentConfig& cfg, bool resume_requested) {
    if (resume_requested)
        throw std::runtime_error(
            "resume is not supported: runs are deterministic, retrain from scratch instead");
    Dataset ds = load_run_dataset(cfg);
    WorkloadBundle wl;
    wl.train = load_run_workload(cfg, "workload_train");
    wl.train_spec = base_spec(cfg, ds.dims());
    wl.train_spec.n_queries = cfg.workload.n_train;
    wl.train_spec.seed = derive_seed(component_seed(cfg, "workload"), "train");

    const double clip_floor = resolve_clip_floor(cfg, ds.rows());
    std::vector<NamedEstimator> ests = train_all(cfg, ds, wl, clip_floor);
    std::vector<std::string> names = write_estimator_artifacts(cfg, ests);
    record_artifacts(cfg.output_dir, config_hash(cfg), names);
}

namespace {

std::vector<NamedEstimator> load_run_estimators(const ExperimentConfig& cfg) {
    std::vector<NamedEstimator> out;
    for (const auto& e : cfg.estimators) {
        const std::string path = cfg.output_dir + "/ckpt_" + e.name + ".json";
        if (!fs::exists(path)) throw std::runtime_error("missing " + path + "; run train first");
        NamedEstimator ne;
        ne.estimator = load_estimator(path);
        out.push_back(std::move(ne));
    }
    return out;
}

}  // namespace

void cmd_eval(const ExperimentConfig& cfg) {
    Dataset ds = load_run_dataset(cfg);
    Workload test_in = load_run_workload(cfg, "workload_test_indist");
    Workload test_ood = load_run_workload(cfg, "workload_test_ood");
    std::vector<NamedEstimator> ests = load_run_estimators(cfg);

    const std::string hash = config_hash(cfg);
    const double clip_floor = resolve_clip_floor(cfg, ds.rows());
    const double c2 = read_coverage_ratio(cfg);
    EvalOutcome eval = evaluate_all(ests, test_in, test_ood, clip_floor);

    write_file(cfg.output_dir + "/eval_report.json",
               render_eval_json(hash, cfg, clip_floor, c2, eval.rows, eval.degradation));
    write_file(cfg.output_dir + "/eval_report.txt",
               render_eval_text(hash, cfg, clip_floor, c2, eval.rows, eval.degradation));
    record_artifacts(cfg.output_dir, hash, {"eval_report.json", "eval_report.txt"});
}

void cmd_check_measure(const ExperimentConfig& cfg) {
    Dataset ds = load_run_dataset(cfg);
    std::vector<NamedEstimator> ests = load_run_estimators(cfg);
    WorkloadSpec spec = base_spec(cfg, ds.dims());

    const std::string hash = config_hash(cfg);
    std::vector<MeasureCheckReport> reports = measure_all(cfg, ests, spec);
    write_file(cfg.output_dir + "/measure_check.json", render_measure_json(hash, reports));
    write_file(cfg.output_dir + "/measure_check.txt", render_measure_text(hash, reports));
    record_artifacts(cfg.output_dir, hash, {"measure_check.json", "measure_check.txt"});
}

std::string cmd_report(const std::string& run_dir) {
    std::ostringstream os;
    bool any = false;
    const std::pair<const char*, const char*> sections[] = {
        {"evaluation", "/eval_report.txt"},
        {"measure checks", "/measure_check.txt"},
    };
    for (const auto& [title, file] : sections) {
        if (!fs::exists(run_dir + file)) continue;
        os << "== " << title << " ==\n" << read_file(run_dir + file) << "\n";
        any = true;
    }
    if (!any)
        throw std::runtime_error("no reports in " + run_dir + "; run eval or check-measure first");
    return os.str();
}

double cmd_estimate(const std::string& checkpoint_path, const std::string& query_json) {
    EstimatorPtr est = load_estimator(checkpoint_path);
    json j = json::parse(query_json);
    const json& bounds = j.is_object() ? j.at("bounds") : j;
    if (!bounds.is_array()) throw std::invalid_argument("query must be a bounds array");
    RangeQuery q;
    q.bounds.reserve(bounds.size());
    for (const auto& b : bounds) {
        if (b.is_null()) {
            q.bounds.push_back(std::nullopt);
        } else {
            Bounds iv = bounds_from_json(b, "query bound");
            q.bounds.push_back(Interval{iv.lo, iv.hi});
        }
    }
    return est->estimate(q);
}

}  // namespace rangesel
