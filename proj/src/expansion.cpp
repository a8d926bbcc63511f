#include "rangesel/expansion.hpp"

#include <stdexcept>

namespace rangesel {

CdfVertexExpansion expand_query(const RangeQuery& q, std::size_t dims) {
    if (q.dims() != dims) throw std::invalid_argument("query dims mismatch in expansion");

    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < dims; ++c)
        if (q.bounds[c]) cols.push_back(c);

    CdfVertexExpansion out;
    out.n_constrained = cols.size();
    const std::size_t total = std::size_t{1} << cols.size();

    // zero-length intervals cancel pairwise; the aggregate is exactly 0
    for (std::size_t c : cols) {
        if (q.bounds[c]->lo == q.bounds[c]->hi) {
            out.skipped_zero_vertices = total;
            return out;
        }
    }

    std::vector<double> base(dims, 1.0);  // unconstrained columns sit at 1
    out.terms.reserve(total);
    for (std::size_t mask = 0; mask < total; ++mask) {
        SignedVertex v;
        v.coords = base;
        int lowers = 0;
        bool zero = false;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto& iv = *q.bounds[cols[k]];
            const bool take_lower = (mask >> k) & 1u;
            const double coord = take_lower ? iv.lo : iv.hi;
            if (coord == 0.0) {
                zero = true;
                break;
            }
            lowers += take_lower;
            v.coords[cols[k]] = coord;
        }
        if (zero) {
            ++out.skipped_zero_vertices;
            continue;
        }
        v.sign = (lowers % 2 == 0) ? 1 : -1;
        out.terms.push_back(std::move(v));
    }
    return out;
}

double aggregate_expansion(const CdfVertexExpansion& e,
                           const std::function<double(std::span<const double>)>& point_fn) {
    double acc = 0.0;
    for (const auto& t : e.terms) acc += t.sign * point_fn(t.coords);
    return acc;
}

}  // namespace rangesel
