#include "rangesel/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rangesel/io_util.hpp"
#include "rangesel/rng.hpp"

namespace rangesel {

namespace {

std::size_t resolved_max_filters(const WorkloadSpec& spec) {
    return spec.max_filters == 0 ? spec.dims : spec.max_filters;
}

void validate_bounds(const Bounds& b, const char* what, bool is_length) {
    if (!(b.lo <= b.hi)) throw std::invalid_argument(std::string(what) + " bounds are inverted");
    if (is_length) {
        if (b.lo <= 0.0) throw std::invalid_argument(std::string(what) + " must be positive");
    } else {
        if (b.lo < 0.0 || b.hi > 1.0)
            throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
    }
}

void validate_spec(const WorkloadSpec& spec) {
    if (spec.dims == 0) throw std::invalid_argument("workload dims must be positive");
    if (spec.shifting_attribute >= spec.dims)
        throw std::invalid_argument("shifting attribute out of range");
    const std::size_t maxf = resolved_max_filters(spec);
    if (spec.min_filters == 0 || spec.min_filters > maxf || maxf > spec.dims)
        throw std::invalid_argument("filter count bounds are inconsistent");
    validate_bounds(spec.center_bounds, "center", false);
    validate_bounds(spec.length_bounds, "length", true);
    validate_bounds(spec.other_center_bounds, "other center", false);
    validate_bounds(spec.other_length_bounds, "other length", true);
}

Interval sample_interval(Rng& rng, const Bounds& center, const Bounds& length,
                         std::size_t column) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double c = rng.uniform(center.lo, center.hi);
        const double l = rng.uniform(length.lo, length.hi);
        const double lo = std::clamp(c - l / 2.0, 0.0, 1.0);
        const double hi = std::clamp(c + l / 2.0, 0.0, 1.0);
        if (lo < hi) return Interval{lo, hi};
    }
    throw std::runtime_error("could not sample a non-degenerate interval for column " +
                             std::to_string(column));
}

RangeQuery sample_one(Rng& rng, const WorkloadSpec& spec, std::vector<std::size_t>& others) {
    const std::size_t maxf = resolved_max_filters(spec);
    const std::size_t k = spec.min_filters == maxf
                              ? spec.min_filters
                              : static_cast<std::size_t>(rng.range_int(
                                    static_cast<long long>(spec.min_filters),
                                    static_cast<long long>(maxf)));

    others.clear();
    for (std::size_t c = 0; c < spec.dims; ++c)
        if (c != spec.shifting_attribute) others.push_back(c);
    for (std::size_t j = 0; j + 1 < k; ++j)
        std::swap(others[j], others[j + rng.index(others.size() - j)]);

    RangeQuery q;
    q.bounds.assign(spec.dims, std::nullopt);
    q.bounds[spec.shifting_attribute] =
        sample_interval(rng, spec.center_bounds, spec.length_bounds, spec.shifting_attribute);
    for (std::size_t j = 0; j + 1 < k; ++j) {
        const std::size_t col = others[j];
        q.bounds[col] =
            sample_interval(rng, spec.other_center_bounds, spec.other_length_bounds, col);
    }
    return q;
}

}  // namespace

std::vector<RangeQuery> sample_queries(const WorkloadSpec& spec) {
    validate_spec(spec);
    Rng rng(derive_seed(spec.seed, "queries"));
    std::vector<RangeQuery> out;
    out.reserve(spec.n_queries);
    std::vector<std::size_t> scratch;
    for (std::size_t i = 0; i < spec.n_queries; ++i) out.push_back(sample_one(rng, spec, scratch));
    return out;
}

RangeQuery sample_query(Rng& rng, const WorkloadSpec& spec) {
    validate_spec(spec);
    std::vector<std::size_t> scratch;
    return sample_one(rng, spec, scratch);
}

Workload label_workload(const Dataset& ds, std::vector<RangeQuery> queries, std::string tag) {
    Workload w;
    w.tag = std::move(tag);
    w.items.reserve(queries.size());
    for (auto& q : queries) {
        const double sel = true_selectivity(ds, q);
        w.items.push_back(LabeledQuery{std::move(q), sel});
    }
    return w;
}

Workload sample_workload(const Dataset& ds, const WorkloadSpec& spec, std::string tag) {
    if (spec.dims != ds.dims())
        throw std::invalid_argument("workload dims do not match the dataset");
    return label_workload(ds, sample_queries(spec), std::move(tag));
}

Workload sample_disjoint(const Dataset& ds, const WorkloadSpec& spec, const Workload& avoid,
                         std::string tag) {
    validate_spec(spec);
    std::set<std::string> seen;
    for (const auto& item : avoid.items) seen.insert(bounds_to_json(item.query));

    std::vector<RangeQuery> queries = sample_queries(spec);
    Rng redraw(derive_seed(spec.seed, "dedup"));
    std::vector<std::size_t> scratch;
    for (auto& q : queries) {
        int attempt = 0;
        while (seen.count(bounds_to_json(q))) {
            if (++attempt > 10000)
                throw std::runtime_error("could not sample a query outside the avoided set");
            q = sample_one(redraw, spec, scratch);
        }
    }
    return label_workload(ds, std::move(queries), std::move(tag));
}

namespace {

std::pair<Workload, Workload> sample_disjoint_pair(const Dataset& ds,
                                                   const WorkloadSpec& train_spec,
                                                   const WorkloadSpec& test_spec) {
    Workload train = sample_workload(ds, train_spec, "train");
    Workload test = sample_disjoint(ds, test_spec, train, "test_ood");
    return {std::move(train), std::move(test)};
}

}  // namespace

std::pair<Workload, Workload> make_center_move_pair(const Dataset& ds, WorkloadSpec base,
                                                    Bounds train_center, Bounds test_center) {
    WorkloadSpec train_spec = base;
    train_spec.center_bounds = train_center;
    train_spec.seed = derive_seed(base.seed, "pair-train");
    WorkloadSpec test_spec = base;
    test_spec.center_bounds = test_center;
    test_spec.seed = derive_seed(base.seed, "pair-test");
    validate_spec(train_spec);
    return sample_disjoint_pair(ds, train_spec, test_spec);
}

std::pair<Workload, Workload> make_granularity_shift_pair(const Dataset& ds, WorkloadSpec base,
                                                          Bounds train_length,
                                                          Bounds test_length) {
    WorkloadSpec train_spec = base;
    train_spec.length_bounds = train_length;
    train_spec.seed = derive_seed(base.seed, "pair-train");
    WorkloadSpec test_spec = base;
    test_spec.length_bounds = test_length;
    test_spec.seed = derive_seed(base.seed, "pair-test");
    validate_spec(train_spec);
    return sample_disjoint_pair(ds, train_spec, test_spec);
}

namespace {

/// Per-grid-point hit counts of clipped shifting-attribute intervals.
std::vector<std::size_t> coverage_counts(const WorkloadSpec& spec, std::size_t grid_points,
                                         std::size_t samples) {
    Rng rng(derive_seed(spec.seed, "c2"));
    std::vector<std::size_t> counts(grid_points, 0);
    const double step = 1.0 / static_cast<double>(grid_points - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        const Interval iv =
            sample_interval(rng, spec.center_bounds, spec.length_bounds, spec.shifting_attribute);
        // grid indices j with lo < j*step <= hi
        const std::size_t first =
            static_cast<std::size_t>(std::floor(iv.lo / step)) + 1;  // smallest j with j*step > lo
        for (std::size_t j = first; j < grid_points; ++j) {
            const double x = static_cast<double>(j) * step;
            if (x > iv.hi) break;
            if (x > iv.lo) ++counts[j];
        }
    }
    return counts;
}

}  // namespace

double estimate_c2(const WorkloadSpec& train_spec, const WorkloadSpec& test_spec,
                   std::size_t grid_points, std::size_t samples) {
    if (grid_points < 2) throw std::invalid_argument("need at least two grid points");
    if (samples == 0) throw std::invalid_argument("need at least one sample");
    validate_bounds(train_spec.center_bounds, "center", false);
    validate_bounds(train_spec.length_bounds, "length", true);
    validate_bounds(test_spec.center_bounds, "center", false);
    validate_bounds(test_spec.length_bounds, "length", true);

    const auto train_counts = coverage_counts(train_spec, grid_points, samples);
    const auto test_counts = coverage_counts(test_spec, grid_points, samples);

    double worst = 0.0;
    for (std::size_t j = 0; j < grid_points; ++j) {
        if (test_counts[j] == 0) continue;
        if (train_counts[j] == 0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, static_cast<double>(test_counts[j]) /
                                    static_cast<double>(train_counts[j]));
    }
    return worst;
}

std::pair<WorkloadSpec, WorkloadSpec> reference_center_move_specs(WorkloadSpec base) {
    WorkloadSpec train = base;
    train.center_bounds = Bounds{0.25, 0.75};
    train.length_bounds = Bounds{0.5, 0.5};
    WorkloadSpec test = train;
    test.center_bounds = Bounds{0.5, 0.75};
    test.seed = derive_seed(base.seed, "ref-test");
    return {train, test};
}

std::pair<WorkloadSpec, WorkloadSpec> reference_granularity_specs(WorkloadSpec base) {
    WorkloadSpec train = base;
    train.center_bounds = Bounds{1.0 / 12.0, 11.0 / 12.0};
    train.length_bounds = Bounds{1.0 / 6.0, 1.0 / 6.0};
    WorkloadSpec test = base;
    test.center_bounds = Bounds{5.0 / 12.0, 7.0 / 12.0};
    test.length_bounds = Bounds{1.0 / 3.0, 1.0 / 3.0};
    test.seed = derive_seed(base.seed, "ref-test");
    return {train, test};
}

AlignmentCheck verify_alignment_example(double delta, std::size_t subdivisions) {
    if (subdivisions == 0) throw std::invalid_argument("need at least one subdivision");
    const double center_lo = -3.0 / 8.0, center_hi = 3.0 / 8.0;
    const double half_len = 1.0 / 8.0;
    const std::size_t inner = 400;

    auto model_minus_true = [delta](double x) { return 2.0 * delta * x; };

    double signed_acc = 0.0, abs_acc = 0.0;
    const double outer_step = (center_hi - center_lo) / static_cast<double>(subdivisions);
    for (std::size_t i = 0; i < subdivisions; ++i) {
        const double c = center_lo + (static_cast<double>(i) + 0.5) * outer_step;
        const double inner_step = 2.0 * half_len / static_cast<double>(inner);
        double sum = 0.0, abs_sum = 0.0;
        for (std::size_t j = 0; j < inner; ++j) {
            const double x = c - half_len + (static_cast<double>(j) + 0.5) * inner_step;
            const double d = model_minus_true(x);
            sum += d * inner_step;
            abs_sum += std::abs(d) * inner_step;
        }
        signed_acc += std::abs(sum);
        abs_acc += abs_sum;
    }
    AlignmentCheck r;
    r.signed_term = signed_acc / static_cast<double>(subdivisions);
    r.absolute_term = abs_acc / static_cast<double>(subdivisions);
    r.holds = r.signed_term >= 0.5 * r.absolute_term;
    return r;
}

void save_workload(const Workload& w, const std::string& path) {
    std::string out;
    for (const auto& item : w.items) {
        nlohmann::json j;
        j["bounds"] = nlohmann::json::parse(bounds_to_json(item.query));
        j["sel"] = item.selectivity;
        j["tag"] = w.tag;
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

Workload load_workload(const std::string& path) {
    Workload w;
    bool first = true;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        LabeledQuery item;
        item.query = bounds_from_json(j.at("bounds").dump());
        item.selectivity = j.at("sel").get<double>();
        if (first) {
            w.tag = j.at("tag").get<std::string>();
            first = false;
        }
        w.items.push_back(std::move(item));
    }
    return w;
}

}  // namespace rangesel
