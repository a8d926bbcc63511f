#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "rangesel/dataset.hpp"
#include "rangesel/estimator.hpp"
#include "rangesel/workload.hpp"

namespace rangesel {

/// Equi-width grid histogram. Counts are stored as a prefix-sum grid, and a
/// query estimate is the signed vertex sum of the multilinearly interpolated
/// empirical CDF. That is the same value as integrating bucket counts with
/// fractional coverage of partially overlapped buckets, and it makes the
/// estimator additive and monotone by construction.
class GridHistogramEstimator : public SelectivityEstimator {
public:
    GridHistogramEstimator(std::size_t dims, std::size_t buckets_per_dim,
                           std::vector<double> prefix, std::size_t rows);

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return "hist"; }

    /// Interpolated empirical CDF at a point.
    double cdf_at(std::span<const double> coords) const;

    std::size_t dims() const { return dims_; }
    std::size_t buckets_per_dim() const { return buckets_; }
    std::size_t rows() const { return rows_; }
    const std::vector<double>& prefix() const { return prefix_; }

private:
    std::size_t dims_;
    std::size_t buckets_;
    std::vector<double> prefix_;  // buckets^dims cumulative counts
    std::size_t rows_;
};

/// Builds the histogram from a dataset. buckets_per_dim^dims cells must not
/// exceed max_cells.
std::unique_ptr<GridHistogramEstimator> build_grid_histogram(const Dataset& ds,
                                                             std::size_t buckets_per_dim,
                                                             std::size_t max_cells = (1u << 22));

/// Uniform row sample; estimates are exact fractions of the sample.
class RowSampleEstimator : public SelectivityEstimator {
public:
    RowSampleEstimator(std::size_t dims, std::vector<double> rows);

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return "sample"; }

    std::size_t sample_size() const { return dims_ == 0 ? 0 : rows_.size() / dims_; }
    const std::vector<double>& sample_rows() const { return rows_; }
    std::size_t dims() const { return dims_; }

private:
    std::size_t dims_;
    std::vector<double> rows_;  // row-major sample
};

/// Samples sample_size rows without replacement (the full table when
/// sample_size >= rows, making the estimator exact).
std::unique_ptr<RowSampleEstimator> build_sampling_estimator(const Dataset& ds,
                                                             std::size_t sample_size,
                                                             std::uint64_t seed);

/// Least-squares polynomial over the flattened query encoding, ridge 1e-8.
class PolynomialEstimator : public SelectivityEstimator {
public:
    PolynomialEstimator(std::size_t dims, std::size_t degree, std::vector<double> coef);

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return "poly"; }

    std::size_t dims() const { return dims_; }
    std::size_t degree() const { return degree_; }
    const std::vector<double>& coefficients() const { return coef_; }

    /// Monomial feature expansion of an encoded query (degree <= 2: constant,
    /// linear, squares and pairwise products).
    static std::vector<double> features(std::span<const double> encoded, std::size_t degree);

private:
    std::size_t dims_;
    std::size_t degree_;
    std::vector<double> coef_;
};

std::unique_ptr<PolynomialEstimator> fit_parametric(std::size_t dims, const Workload& train,
                                                    std::size_t degree);

/// Histogram with learned multiplicative corrections. Observed queries
/// contribute ratios actual/estimated keyed by their upper bound on the
/// adjusted attribute; estimates multiply the histogram value by the
/// linearly interpolated ratio at the query's key (nearest ratio outside the
/// observed key range, 1 when nothing was observed).
class LeoEstimator : public SelectivityEstimator {
public:
    LeoEstimator(std::shared_ptr<const GridHistogramEstimator> base, std::size_t axis,
                 std::vector<double> keys, std::vector<double> ratios);

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return "leo"; }

    double ratio_at(double key) const;
    std::size_t axis() const { return axis_; }
    const std::vector<double>& keys() const { return keys_; }
    const std::vector<double>& ratios() const { return ratios_; }
    const GridHistogramEstimator& base() const { return *base_; }
    std::shared_ptr<const GridHistogramEstimator> base_ptr() const { return base_; }

private:
    std::shared_ptr<const GridHistogramEstimator> base_;
    std::size_t axis_;
    std::vector<double> keys_;    // sorted, unique
    std::vector<double> ratios_;  // parallel to keys_
};

/// Collects correction ratios from an observed (labeled) workload. Queries
/// whose histogram estimate is below floor_sel are skipped; ratios sharing a
/// key are averaged.
std::unique_ptr<LeoEstimator> build_leo(std::shared_ptr<const GridHistogramEstimator> base,
                                        const Workload& observed, std::size_t axis,
                                        double floor_sel = 1e-9);

}  // namespace rangesel
