#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "rangesel/query.hpp"

namespace rangesel {

/// Common interface of all selectivity estimators. estimate() is a pure
/// function of the frozen model state and the query; the call counter tracks
/// underlying model invocations for observability.
class SelectivityEstimator {
public:
    virtual ~SelectivityEstimator() = default;

    virtual double estimate(const RangeQuery& q) const = 0;

    /// Estimator family tag ("direct", "cdf", "selfcon", "hist", "sample",
    /// "poly", "leo").
    virtual std::string kind() const = 0;

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

    std::uint64_t model_calls() const { return calls_.load(std::memory_order_relaxed); }
    void reset_model_calls() const { calls_.store(0, std::memory_order_relaxed); }

protected:
    void count_calls(std::uint64_t n) const { calls_.fetch_add(n, std::memory_order_relaxed); }

private:
    mutable std::atomic<std::uint64_t> calls_{0};
    std::string name_;
};

using EstimatorPtr = std::unique_ptr<SelectivityEstimator>;

}  // namespace rangesel
