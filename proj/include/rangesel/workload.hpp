#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rangesel/dataset.hpp"
#include "rangesel/query.hpp"

namespace rangesel {

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;

    bool operator==(const Bounds&) const = default;
};

/// Distribution over query shapes. One designated shifting attribute gets
/// its own center/length bounds; the remaining constrained columns follow
/// the `other_*` policy. The number of constrained columns per query is
/// uniform on [min_filters, max_filters] and always includes the shifting
/// attribute.
struct WorkloadSpec {
    std::size_t n_queries = 20000;
    std::size_t dims = 2;
    std::size_t shifting_attribute = 0;
    std::size_t min_filters = 1;
    std::size_t max_filters = 0;  // 0 means dims
    Bounds center_bounds{0.0, 1.0};
    Bounds length_bounds{0.05, 0.5};
    Bounds other_center_bounds{0.0, 1.0};
    Bounds other_length_bounds{0.05, 0.5};
    std::uint64_t seed = 1;

    bool operator==(const WorkloadSpec&) const = default;
};

struct LabeledQuery {
    RangeQuery query;
    double selectivity = 0.0;
};

struct Workload {
    std::vector<LabeledQuery> items;
    std::string tag;  // "train", "test_indist", "test_ood"

    std::size_t size() const { return items.size(); }
};

/// Samples unlabeled queries from the spec. Intervals are (c - l/2, c + l/2]
/// clipped to [0, 1]; degenerate intervals are resampled.
std::vector<RangeQuery> sample_queries(const WorkloadSpec& spec);

/// Draws one query from the spec's shape distribution using the caller's
/// stream. spec.seed and spec.n_queries are ignored.
class Rng;
RangeQuery sample_query(Rng& rng, const WorkloadSpec& spec);

/// Samples and labels a workload against a dataset.
Workload sample_workload(const Dataset& ds, const WorkloadSpec& spec, std::string tag);

/// Samples a labeled workload whose queries avoid exact bounds equality with
/// any query in `avoid`; colliding draws are resampled.
Workload sample_disjoint(const Dataset& ds, const WorkloadSpec& spec, const Workload& avoid,
                         std::string tag);

/// Labels previously sampled queries with their true selectivities.
Workload label_workload(const Dataset& ds, std::vector<RangeQuery> queries, std::string tag);

/// Builds a (train, test) pair that differs only in the shifting attribute's
/// center bounds. Test queries exactly equal to a train query are resampled.
std::pair<Workload, Workload> make_center_move_pair(const Dataset& ds, WorkloadSpec base,
                                                    Bounds train_center, Bounds test_center);

/// Same, but the pair differs in the shifting attribute's length bounds.
std::pair<Workload, Workload> make_granularity_shift_pair(const Dataset& ds, WorkloadSpec base,
                                                          Bounds train_length, Bounds test_length);

/// Monte-Carlo estimate of the worst-case coverage ratio between two query
/// distributions on the shifting attribute: max over a uniform grid of x of
/// P[test query covers x] / P[train query covers x]. Returns +infinity if
/// some grid point is covered under test but never under train.
double estimate_c2(const WorkloadSpec& train_spec, const WorkloadSpec& test_spec,
                   std::size_t grid_points, std::size_t samples);

/// Reference center-move pair on the unit domain: fixed length 1/2, train
/// centers uniform on [1/4, 3/4], test centers uniform on [1/2, 3/4]. The
/// worst-case coverage ratio of this construction is exactly 2.
std::pair<WorkloadSpec, WorkloadSpec> reference_center_move_specs(WorkloadSpec base);

/// Reference granularity pair on the unit domain: train length 1/6 with
/// centers uniform on [1/12, 11/12], test length 1/3 with centers uniform on
/// [5/12, 7/12]. The worst-case coverage ratio is exactly 5.
std::pair<WorkloadSpec, WorkloadSpec> reference_granularity_specs(WorkloadSpec base);

struct AlignmentCheck {
    double signed_term = 0.0;    // E_R | integral of (f_hat - f) over R |
    double absolute_term = 0.0;  // E_R integral of |f_hat - f| over R
    bool holds = false;          // signed_term >= absolute_term / 2
};

/// Closed-form family check: density 1 on [-1/2, 1/2], perturbed model
/// density 1 + 2*delta*x, ranges of length 1/4 with centers uniform on
/// [-3/8, 3/8]. Integrates both sides numerically and reports whether the
/// expected signed range error dominates half the expected absolute error.
AlignmentCheck verify_alignment_example(double delta, std::size_t subdivisions = 10000);

/// Workload persistence: line-delimited records
/// {"bounds": [[lo,hi]|null, ...], "sel": s, "tag": t}, bit-exact round-trip.
void save_workload(const Workload& w, const std::string& path);
Workload load_workload(const std::string& path);

}  // namespace rangesel
