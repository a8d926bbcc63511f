#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rangesel/query.hpp"

namespace rangesel {

struct SignedVertex {
    int sign = 1;  // (-1)^(number of lower ends chosen)
    std::vector<double> coords;
};

/// Inclusion-exclusion expansion of a range query into signed CDF evaluation
/// points. For n constrained columns the full expansion has 2^n vertices;
/// vertices with any zero coordinate evaluate to CDF 0 and are dropped but
/// counted in skipped_zero_vertices.
struct CdfVertexExpansion {
    std::vector<SignedVertex> terms;
    std::size_t skipped_zero_vertices = 0;
    std::size_t n_constrained = 0;
};

/// Expands q over `dims` columns. Unconstrained columns sit at coordinate 1.
/// A query with a zero-length constrained interval expands to no terms: its
/// vertex terms cancel pairwise, so the aggregate is exactly 0.
CdfVertexExpansion expand_query(const RangeQuery& q, std::size_t dims);

/// Signed sum of a point function over the expansion terms.
double aggregate_expansion(const CdfVertexExpansion& e,
                           const std::function<double(std::span<const double>)>& point_fn);

}  // namespace rangesel
