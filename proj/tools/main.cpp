#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rangesel/experiment.hpp"
#include "rangesel/io_util.hpp"

using namespace rangesel;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "experiment config JSON")
        ->check(CLI::ExistingFile);
    cmd->add_option("-s,--seed", opts.seed, "override the master seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("-o,--out", opts.out_dir, "override the output directory");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg =
        opts.config_path.empty() ? default_config() : load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-driven selectivity estimation workbench"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool resume = false;
    std::string report_dir;
    std::string ckpt_path;
    std::string query_json;

    CLI::App* run = app.add_subcommand("run", "full pipeline: data, workloads, training, reports");
    add_common(run, opts);

    CLI::App* gen_data = app.add_subcommand("gen-data", "generate the dataset artifact");
    add_common(gen_data, opts);

    CLI::App* gen_wl = app.add_subcommand("gen-workload", "sample and label the three workloads");
    add_common(gen_wl, opts);

    CLI::App* train = app.add_subcommand("train", "train every configured estimator");
    add_common(train, opts);
    train->add_flag("--resume", resume, "resume from existing checkpoints");

    CLI::App* eval = app.add_subcommand("eval", "evaluate checkpoints on the test workloads");
    add_common(eval, opts);

    CLI::App* measure = app.add_subcommand("check-measure",
                                           "probe checkpoints for signed-measure consistency");
    add_common(measure, opts);

    CLI::App* report = app.add_subcommand("report", "render the consolidated run report");
    report->add_option("dir", report_dir, "run directory")->required();

    CLI::App* estimate = app.add_subcommand("estimate", "one estimate from a checkpoint");
    estimate->add_option("checkpoint", ckpt_path, "checkpoint JSON path")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("query", query_json,
                         "query bounds JSON, e.g. [[0.1,0.4],null,[0.2,0.9]]")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            PipelineResult res = run_pipeline(cfg, true);
            std::cout << res.eval_text << "\n" << res.measure_text;
            std::cout << "artifacts in " << cfg.output_dir << "\n";
        } else if (gen_data->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            cmd_gen_data(cfg);
            std::cout << "wrote " << cfg.output_dir << "/dataset.csv\n";
        } else if (gen_wl->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            cmd_gen_workload(cfg);
            std::cout << "wrote workloads to " << cfg.output_dir << "\n";
        } else if (train->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            cmd_train(cfg, resume);
            std::cout << "wrote checkpoints to " << cfg.output_dir << "\n";
        } else if (eval->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            cmd_eval(cfg);
            std::cout << read_file(cfg.output_dir + "/eval_report.txt");
        } else if (measure->parsed()) {
            ExperimentConfig cfg = resolve_config(opts);
            cmd_check_measure(cfg);
            std::cout << read_file(cfg.output_dir + "/measure_check.txt");
        } else if (report->parsed()) {
            std::cout << cmd_report(report_dir);
        } else if (estimate->parsed()) {
            std::printf("%.17g\n", cmd_estimate(ckpt_path, query_json));
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 0;
}
