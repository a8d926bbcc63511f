#pragma once

// Straight-line reference implementations used to cross-check the library.
// Deliberately written without any library helpers so errors cannot be
// shared between implementation and check.

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

struct Range {
    // one entry per column; disengaged = unconstrained
    std::vector<std::optional<std::pair<double, double>>> cols;  // (lo, hi]
};

// Nested-loop count of rows matching lo < x <= hi on each constrained column.
inline double selectivity(const std::vector<std::vector<double>>& rows, const Range& r) {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& row : rows) {
        bool ok = true;
        for (std::size_t c = 0; c < r.cols.size(); ++c) {
            if (!r.cols[c].has_value()) continue;
            const double lo = r.cols[c]->first;
            const double hi = r.cols[c]->second;
            if (row[c] <= lo || row[c] > hi) {
                ok = false;
                break;
            }
        }
        if (ok) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Chi-square statistic of observed bin counts against a uniform expectation.
inline double chi_square_uniform(const std::vector<std::size_t>& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

// Two-column inclusion-exclusion over a point CDF, the textbook four-corner
// formula: S = F(b1,b2) - F(a1,b2) - F(b1,a2) + F(a1,a2).
template <typename F>
double two_d_corner_sum(F cdf, double a1, double b1, double a2, double b2) {
    auto at = [&](double x, double y) {
        if (x == 0.0 || y == 0.0) return 0.0;
        return cdf(x, y);
    };
    return at(b1, b2) - at(a1, b2) - at(b1, a2) + at(a1, a2);
}

// Expected worst-case coverage ratios of the reference shift constructions,
// derived by hand from the closed-form coverage functions.
inline constexpr double kCenterMoveRatio = 2.0;
inline constexpr double kGranularityRatio = 5.0;

// Closed forms for the density-alignment family: density 1 on [-1/2, 1/2],
// model density 1 + 2*delta*x, ranges of length 1/4, centers uniform on
// [-3/8, 3/8].
//   signed term  : E_c | delta * c / 2 |            = 3|delta|/32
//   absolute term: 2|delta| * E_c int_range |x| dx  = 7|delta|/72
inline double alignment_signed_term(double delta) { return 3.0 * std::fabs(delta) / 32.0; }
inline double alignment_absolute_term(double delta) { return 7.0 * std::fabs(delta) / 72.0; }

}  // namespace oracle
