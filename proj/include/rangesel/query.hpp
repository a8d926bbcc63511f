#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rangesel {

/// Half-open interval (lo, hi] on the unit domain.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool operator==(const Interval&) const = default;
};

/// Hyper-rectangle range predicate. One optional interval per column;
/// a disengaged slot leaves that column unconstrained.
struct RangeQuery {
    std::vector<std::optional<Interval>> bounds;

    std::size_t dims() const { return bounds.size(); }

    std::size_t n_constrained() const {
        std::size_t n = 0;
        for (const auto& b : bounds)
            if (b) ++n;
        return n;
    }

    std::vector<std::size_t> constrained_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < bounds.size(); ++i)
            if (bounds[i]) idx.push_back(i);
        return idx;
    }

    /// Row membership: lo < x <= hi on every constrained column.
    bool contains(std::span<const double> row) const {
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            if (!bounds[i]) continue;
            const double x = row[i];
            if (!(bounds[i]->lo < x && x <= bounds[i]->hi)) return false;
        }
        return true;
    }

    /// Column-wise containment: every constraint of `outer` is at least as
    /// tight in `*this`.
    bool contained_in(const RangeQuery& outer) const;

    bool operator==(const RangeQuery&) const = default;
};

/// Throws std::invalid_argument unless every interval satisfies
/// 0 <= lo <= hi <= 1.
void validate(const RangeQuery& q);

/// Serializes just the bounds array: [[lo,hi]|null, ...].
std::string bounds_to_json(const RangeQuery& q);

/// Parses a bounds array produced by bounds_to_json.
RangeQuery bounds_from_json(const std::string& text);

}  // namespace rangesel
