#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rangesel/estimator.hpp"
#include "rangesel/workload.hpp"

namespace rangesel {

enum class Tier { TwoStar, OneStar, ZeroStar };

std::string tier_symbol(Tier t);  // two-character star rendering
std::string tier_name(Tier t);

/// RMSE under 0.05 or median Qerror under 2 earns both stars; RMSE under
/// 0.2 or median Qerror under 10 earns one.
Tier tier_from_rmse(double rmse);
Tier tier_from_median_qerror(double med);

struct EvalReport {
    std::string estimator;
    std::string workload_tag;
    std::size_t n_queries = 0;
    double clip_floor = 0.0;
    double rmse = 0.0;          // raw predictions
    double qerror_median = 0.0;  // predictions floored at clip_floor
    double qerror_p90 = 0.0;
    double qerror_max = 0.0;
    Tier rmse_tier = Tier::ZeroStar;
    Tier qerror_tier = Tier::ZeroStar;
    std::uint64_t model_calls = 0;
    double calls_per_query = 0.0;
};

/// Evaluates an estimator on a labeled workload. RMSE uses the raw
/// predictions; Qerror floors prediction and label at clip_floor, so it is
/// always >= 1. Percentiles are nearest-rank. Empty workloads are an error.
EvalReport evaluate(const SelectivityEstimator& est, const Workload& w, double clip_floor);

struct DegradationSummary {
    std::string estimator;
    double rmse_ratio = 0.0;  // out-of-distribution / in-distribution
    double qerror_median_ratio = 0.0;
    double qerror_p90_ratio = 0.0;
};

/// Out-of-distribution degradation relative to the in-distribution report.
DegradationSummary compare(const EvalReport& in_dist, const EvalReport& ood);

/// Nearest-rank percentile of an unsorted sample, p in (0, 100].
double percentile_nearest_rank(std::vector<double> values, double p);

}  // namespace rangesel
