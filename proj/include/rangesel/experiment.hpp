#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rangesel/baselines.hpp"
#include "rangesel/dataset.hpp"
#include "rangesel/measure_check.hpp"
#include "rangesel/metrics.hpp"
#include "rangesel/nn_estimators.hpp"
#include "rangesel/workload.hpp"

namespace rangesel {

enum class OodScenario { None, CenterMove, GranularityShift };

OodScenario scenario_from_string(const std::string& s);
std::string to_string(OodScenario s);

struct DatasetConfig {
    std::string kind = "gaussian";  // "gaussian" or "csv"
    std::size_t dims = 13;
    std::size_t rows = 49000;
    double correlation = 0.8;
    std::string csv_path;
    bool csv_has_header = true;
};

struct WorkloadConfig {
    std::size_t n_train = 20000;
    std::size_t n_test = 5000;
    std::size_t shifting_attribute = 0;
    std::size_t min_filters = 1;
    std::size_t max_filters = 0;  // 0 means dims
    Bounds center_bounds{0.0, 1.0};
    Bounds length_bounds{0.05, 0.25};
    Bounds other_center_bounds{0.0, 1.0};
    Bounds other_length_bounds{0.05, 0.5};
    OodScenario ood_scenario = OodScenario::GranularityShift;
    Bounds ood_center_bounds{0.0, 1.0};
    Bounds ood_length_bounds{0.55, 0.9};
    std::size_t c2_grid_points = 101;
    std::size_t c2_samples = 200000;
};

struct EstimatorConfig {
    std::string name = "direct";
    std::string kind = "direct";  // direct | cdf | selfcon | hist | sample | poly | leo
    // neural estimators
    std::string loss = "msle";
    std::string optimizer = "adam";
    std::vector<std::size_t> hidden{128, 128};
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    bool precompute_expansions = true;
    // self-consistency extras
    double omega1 = 1.0;
    double omega2 = 1.0;
    std::size_t consistency_batch = 128;
    Bounds consistency_length_bounds{0.02, 1.0};
    // baselines
    std::size_t buckets = 4;
    std::size_t sample_size = 1000;
    std::size_t degree = 2;
};

struct MeasureCheckConfig {
    std::size_t triples = 1000;
    std::size_t chains = 100;
    std::size_t chain_points = 50;
    double additivity_tolerance = 1e-5;
    double monotonicity_tolerance = 1e-9;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "runs/default";
    double clip_floor = 0.0;  // 0 resolves to 1/rows
    DatasetConfig dataset;
    WorkloadConfig workload;
    std::vector<EstimatorConfig> estimators;
    MeasureCheckConfig measure;
};

/// Built-in defaults: synthetic 13-column, 49000-row correlated Gaussian
/// with a granularity-shift workload and the full estimator roster.
ExperimentConfig default_config();

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Stable hex digest of the canonical config serialization; embedded in
/// every JSON artifact the run produces.
std::string config_hash(const ExperimentConfig& cfg);

struct WorkloadBundle {
    WorkloadSpec train_spec, test_in_spec, test_ood_spec;
    Workload train, test_in, test_ood;
    double c2 = 1.0;
};

struct NamedEstimator {
    EstimatorPtr estimator;
    TrainTrace trace;  // empty for non-iterative estimators
};

struct PipelineResult {
    std::string hash;
    double clip_floor = 0.0;
    WorkloadBundle workloads;
    std::vector<NamedEstimator> estimators;
    std::vector<EvalReport> eval_rows;
    std::vector<DegradationSummary> degradation;
    std::vector<MeasureCheckReport> measure;
    std::string eval_json;
    std::string eval_text;
    std::string measure_json;
    std::string measure_text;
};

/// Derived per-component seeds from the master seed.
std::uint64_t component_seed(const ExperimentConfig& cfg, const std::string& role);

Dataset build_dataset(const ExperimentConfig& cfg);
WorkloadBundle build_workloads(const ExperimentConfig& cfg, const Dataset& ds);

/// Full in-process pipeline: dataset, workloads, training, evaluation and
/// measure checks. When write_outputs is set, artifacts land in output_dir.
PipelineResult run_pipeline(const ExperimentConfig& cfg, bool write_outputs);

// CLI-facing steps. Each loads its inputs from cfg.output_dir, writes its
// artifacts there, and records them in the run manifest.
void cmd_gen_data(const ExperimentConfig& cfg);
void cmd_gen_workload(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg, bool resume_requested = false);
void cmd_eval(const ExperimentConfig& cfg);
void cmd_check_measure(const ExperimentConfig& cfg);
/// Renders the consolidated report from the run directory's artifacts.
std::string cmd_report(const std::string& run_dir);

/// One estimate from a saved checkpoint, for ad-hoc inspection.
double cmd_estimate(const std::string& checkpoint_path, const std::string& query_json);

}  // namespace rangesel
