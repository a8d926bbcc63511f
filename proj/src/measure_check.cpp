#include "rangesel/measure_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rangesel/rng.hpp"

namespace rangesel {

std::vector<AdditivityTriple> gen_triples(const WorkloadSpec& spec, std::size_t n,
                                          std::uint64_t seed) {
    Rng rng(derive_seed(seed, "triples"));
    std::vector<AdditivityTriple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        AdditivityTriple t;
        t.whole = sample_query(rng, spec);
        const auto constrained = t.whole.constrained_indices();
        t.axis = constrained[rng.index(constrained.size())];
        const Interval iv = *t.whole.bounds[t.axis];
        double s = rng.uniform(iv.lo, iv.hi);
        while (s <= iv.lo || s >= iv.hi) s = rng.uniform(iv.lo, iv.hi);
        t.split = s;
        t.left = t.whole;
        t.left.bounds[t.axis] = Interval{iv.lo, s};
        t.right = t.whole;
        t.right.bounds[t.axis] = Interval{s, iv.hi};
        out.push_back(std::move(t));
    }
    return out;
}

AdditivityReport check_additivity(const SelectivityEstimator& est,
                                  const std::vector<AdditivityTriple>& triples, double tolerance) {
    AdditivityReport rep;
    rep.n_triples = triples.size();
    rep.tolerance = tolerance;
    for (const auto& t : triples) {
        const double residual =
            std::fabs(est.estimate(t.whole) - est.estimate(t.left) - est.estimate(t.right));
        rep.max_residual = std::max(rep.max_residual, residual);
        if (residual > tolerance) ++rep.n_violations;
    }
    return rep;
}

std::vector<double> extract_cdf_chain(const SelectivityEstimator& est, std::size_t axis,
                                      const RangeQuery& conditioning,
                                      const std::vector<double>& grid) {
    if (axis >= conditioning.dims()) throw std::invalid_argument("sweep axis out of range");
    std::vector<double> chain;
    chain.reserve(grid.size());
    RangeQuery probe = conditioning;
    for (double g : grid) {
        probe.bounds[axis] = Interval{0.0, g};
        chain.push_back(est.estimate(probe));
    }
    return chain;
}

MonotonicityReport check_monotonicity(const std::vector<std::vector<double>>& chains,
                                      double tolerance) {
    MonotonicityReport rep;
    rep.n_chains = chains.size();
    rep.tolerance = tolerance;
    for (const auto& chain : chains) {
        bool chain_bad = false;
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const double drop = chain[i - 1] - chain[i];
            if (drop <= 0.0) continue;
            rep.max_drop = std::max(rep.max_drop, drop);
            if (drop > tolerance) {
                ++rep.n_inversions;
                chain_bad = true;
            }
        }
        if (chain_bad) ++rep.n_chains_with_inversion;
    }
    return rep;
}

MeasureCheckReport run_measure_checks(const SelectivityEstimator& est, const WorkloadSpec& spec,
                                      std::size_t n_triples, std::size_t n_chains,
                                      std::size_t chain_points, std::uint64_t seed,
                                      double additivity_tol, double monotonicity_tol) {
    if (chain_points == 0) throw std::invalid_argument("chains need at least one grid point");

    MeasureCheckReport rep;
    rep.estimator = est.name().empty() ? est.kind() : est.name();

    rep.additivity =
        check_additivity(est, gen_triples(spec, n_triples, derive_seed(seed, "additivity")),
                         additivity_tol);

    std::vector<double> grid(chain_points);
    for (std::size_t k = 0; k < chain_points; ++k)
        grid[k] = static_cast<double>(k + 1) / static_cast<double>(chain_points);

    Rng rng(derive_seed(seed, "chains"));
    std::vector<std::vector<double>> chains;
    chains.reserve(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) {
        const RangeQuery conditioning = sample_query(rng, spec);
        const std::size_t axis = c % spec.dims;
        chains.push_back(extract_cdf_chain(est, axis, conditioning, grid));
    }
    rep.monotonicity = check_monotonicity(chains, monotonicity_tol);
    return rep;
}

std::string to_string(TabulatedVerdict v) {
    switch (v) {
        case TabulatedVerdict::ProbabilityConsistent: return "probability-consistent";
        case TabulatedVerdict::AdditivityViolation: return "additivity-violation";
        case TabulatedVerdict::SignedOnly: return "signed-only";
        case TabulatedVerdict::MonotonicityViolation: return "monotonicity-violation";
    }
    return "?";
}

const std::vector<ThreePointRow>& three_point_fixture() {
    static const std::vector<ThreePointRow> rows = {
        {"consistent", 10, 5, 7, 8},
        {"superadditive", 10, 3, 3, 3},
        {"deficient-mass", 9, 5, 6, 7},
        {"inverted-pair", 10, 4, 5, 11},
    };
    return rows;
}

TabulatedVerdict classify_three_point_row(const ThreePointRow& row) {
    // every point lies in exactly two pairwise ranges
    if (row.ab10 + row.ac10 + row.bc10 != 2 * row.full10)
        return TabulatedVerdict::AdditivityViolation;
    if (row.ab10 > row.full10 || row.ac10 > row.full10 || row.bc10 > row.full10)
        return TabulatedVerdict::MonotonicityViolation;
    if (row.full10 != 10) return TabulatedVerdict::SignedOnly;
    return TabulatedVerdict::ProbabilityConsistent;
}

}  // namespace rangesel
