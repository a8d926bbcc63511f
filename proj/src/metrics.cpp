#include "rangesel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rangesel {

std::string tier_symbol(Tier t) {
    switch (t) {
        case Tier::TwoStar: return "**";
        case Tier::OneStar: return "* ";
        case Tier::ZeroStar: return "--";
    }
    return "??";
}

std::string tier_name(Tier t) {
    switch (t) {
        case Tier::TwoStar: return "two-star";
        case Tier::OneStar: return "one-star";
        case Tier::ZeroStar: return "zero-star";
    }
    return "?";
}

Tier tier_from_rmse(double rmse) {
    if (rmse < 0.05) return Tier::TwoStar;
    if (rmse < 0.2) return Tier::OneStar;
    return Tier::ZeroStar;
}

Tier tier_from_median_qerror(double med) {
    if (med < 2.0) return Tier::TwoStar;
    if (med < 10.0) return Tier::OneStar;
    return Tier::ZeroStar;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
    if (p <= 0.0 || p > 100.0) throw std::invalid_argument("percentile must be in (0, 100]");
    std::sort(values.begin(), values.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

EvalReport evaluate(const SelectivityEstimator& est, const Workload& w, double clip_floor) {
    if (w.items.empty()) throw std::invalid_argument("cannot evaluate on an empty workload");

    EvalReport rep;
    rep.estimator = est.name().empty() ? est.kind() : est.name();
    rep.workload_tag = w.tag;
    rep.n_queries = w.size();
    rep.clip_floor = clip_floor;

    est.reset_model_calls();
    double sq = 0.0;
    std::vector<double> qerrors;
    qerrors.reserve(w.size());
    for (const auto& item : w.items) {
        const double pred = est.estimate(item.query);
        const double d = pred - item.selectivity;
        sq += d * d;
        const double p = std::max(pred, clip_floor);
        const double t = std::max(item.selectivity, clip_floor);
        qerrors.push_back(std::max(p / t, t / p));
    }
    rep.rmse = std::sqrt(sq / static_cast<double>(w.size()));
    rep.qerror_median = percentile_nearest_rank(qerrors, 50);
    rep.qerror_p90 = percentile_nearest_rank(qerrors, 90);
    rep.qerror_max = *std::max_element(qerrors.begin(), qerrors.end());
    rep.rmse_tier = tier_from_rmse(rep.rmse);
    rep.qerror_tier = tier_from_median_qerror(rep.qerror_median);
    rep.model_calls = est.model_calls();
    rep.calls_per_query = static_cast<double>(rep.model_calls) / static_cast<double>(w.size());
    return rep;
}

DegradationSummary compare(const EvalReport& in_dist, const EvalReport& ood) {
    DegradationSummary d;
    d.estimator = in_dist.estimator;
    d.rmse_ratio = in_dist.rmse == 0.0 ? 0.0 : ood.rmse / in_dist.rmse;
    d.qerror_median_ratio =
        in_dist.qerror_median == 0.0 ? 0.0 : ood.qerror_median / in_dist.qerror_median;
    d.qerror_p90_ratio = in_dist.qerror_p90 == 0.0 ? 0.0 : ood.qerror_p90 / in_dist.qerror_p90;
    return d;
}

}  // namespace rangesel
