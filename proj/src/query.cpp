#include "rangesel/query.hpp"

#include <stdexcept>

#include "json.hpp"

namespace rangesel {

bool RangeQuery::contained_in(const RangeQuery& outer) const {
    if (bounds.size() != outer.bounds.size()) return false;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (!outer.bounds[i]) continue;  // outer unconstrained covers anything
        if (!bounds[i]) return false;
        if (bounds[i]->lo < outer.bounds[i]->lo || bounds[i]->hi > outer.bounds[i]->hi)
            return false;
    }
    return true;
}

void validate(const RangeQuery& q) {
    for (std::size_t i = 0; i < q.bounds.size(); ++i) {
        if (!q.bounds[i]) continue;
        const auto& iv = *q.bounds[i];
        if (!(iv.lo >= 0.0 && iv.lo <= iv.hi && iv.hi <= 1.0))
            throw std::invalid_argument("query interval out of range on column " +
                                        std::to_string(i));
    }
}

std::string bounds_to_json(const RangeQuery& q) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : q.bounds) {
        if (b)
            arr.push_back(nlohmann::json::array({b->lo, b->hi}));
        else
            arr.push_back(nullptr);
    }
    return arr.dump();
}

RangeQuery bounds_from_json(const std::string& text) {
    const nlohmann::json arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw std::invalid_argument("bounds json must be an array");
    RangeQuery q;
    q.bounds.reserve(arr.size());
    for (const auto& e : arr) {
        if (e.is_null()) {
            q.bounds.emplace_back(std::nullopt);
        } else if (e.is_array() && e.size() == 2) {
            q.bounds.emplace_back(Interval{e[0].get<double>(), e[1].get<double>()});
        } else {
            throw std::invalid_argument("bounds entry must be null or [lo, hi]");
        }
    }
    return q;
}

}  // namespace rangesel
