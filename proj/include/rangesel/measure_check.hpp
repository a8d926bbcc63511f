#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rangesel/estimator.hpp"
#include "rangesel/workload.hpp"

namespace rangesel {

/// A query split along one constrained axis: whole = left + right, with the
/// two parts sharing the split boundary.
struct AdditivityTriple {
    RangeQuery whole;
    RangeQuery left;
    RangeQuery right;
    std::size_t axis = 0;
    double split = 0.0;
};

/// Samples queries from spec and splits each along a random constrained
/// axis at a point uniform strictly inside the interval.
std::vector<AdditivityTriple> gen_triples(const WorkloadSpec& spec, std::size_t n,
                                          std::uint64_t seed);

struct AdditivityReport {
    std::size_t n_triples = 0;
    std::size_t n_violations = 0;
    double max_residual = 0.0;
    double tolerance = 1e-5;

    bool passed() const { return n_violations == 0; }
};

/// Checks |S(whole) - S(left) - S(right)| <= tolerance per triple.
AdditivityReport check_additivity(const SelectivityEstimator& est,
                                  const std::vector<AdditivityTriple>& triples,
                                  double tolerance = 1e-5);

/// One-dimensional sweep of an estimator: the conditioning query with the
/// given axis replaced by (0, g] for each grid value g. A consistent
/// estimator's values must be nondecreasing in g.
std::vector<double> extract_cdf_chain(const SelectivityEstimator& est, std::size_t axis,
                                      const RangeQuery& conditioning,
                                      const std::vector<double>& grid);

struct MonotonicityReport {
    std::size_t n_chains = 0;
    std::size_t n_chains_with_inversion = 0;
    std::size_t n_inversions = 0;  // adjacent decreasing pairs across all chains
    double max_drop = 0.0;
    double tolerance = 1e-9;

    bool passed() const { return n_inversions == 0; }
};

MonotonicityReport check_monotonicity(const std::vector<std::vector<double>>& chains,
                                      double tolerance = 1e-9);

struct MeasureCheckReport {
    std::string estimator;
    AdditivityReport additivity;
    MonotonicityReport monotonicity;
};

/// Runs both checks: additivity on generated triples, monotonicity on
/// chains swept along each axis in turn over conditioning queries drawn
/// from the spec.
MeasureCheckReport run_measure_checks(const SelectivityEstimator& est, const WorkloadSpec& spec,
                                      std::size_t n_triples, std::size_t n_chains,
                                      std::size_t chain_points, std::uint64_t seed,
                                      double additivity_tol = 1e-5, double monotonicity_tol = 1e-9);

/// Hand-computed reference: three data points A, B, C and the four ranges
/// R_AB, R_AC, R_BC (each containing exactly two points) and R_ABC (all
/// three). Predictions are tabulated in tenths so the classification is
/// exact integer arithmetic.
///
/// Because every point lies in exactly two of the pairwise ranges,
///   S(R_AB) + S(R_AC) + S(R_BC) = 2 * S(R_ABC)
/// for any signed measure, and the implied point masses are
///   m(A) = S(R_AB) + S(R_AC) - S(R_ABC)   (and symmetrically for B, C).
enum class TabulatedVerdict {
    ProbabilityConsistent,  // additive, monotone, total mass 1
    AdditivityViolation,    // no signed measure induces the values
    SignedOnly,             // additive and monotone but total mass != 1
    MonotonicityViolation,  // some pairwise range exceeds the full range
};

std::string to_string(TabulatedVerdict v);

struct ThreePointRow {
    const char* name;
    int full10;  // S(R_ABC) in tenths
    int ab10;
    int ac10;
    int bc10;
};

/// The four tabulated predictors with expected verdicts consistent,
/// additivity violation, signed-only, monotonicity violation, in order.
const std::vector<ThreePointRow>& three_point_fixture();

TabulatedVerdict classify_three_point_row(const ThreePointRow& row);

}  // namespace rangesel
