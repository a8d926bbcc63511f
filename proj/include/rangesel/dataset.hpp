#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rangesel/query.hpp"

namespace rangesel {

struct ColumnStats {
    std::string name;
    double raw_min = 0.0;
    double raw_max = 1.0;
};

/// Equi-correlated multivariate Gaussian synthesizer parameters.
struct GaussianSpec {
    std::size_t dims = 13;
    std::size_t rows = 49000;
    double correlation = 0.8;  // pairwise, must lie in [0, 1)
    std::uint64_t seed = 1;
};

/// Row-major table normalized column-wise to [0, 1].
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t dims, std::vector<double> values, std::vector<ColumnStats> columns);

    std::size_t dims() const { return dims_; }
    std::size_t rows() const { return dims_ == 0 ? 0 : values_.size() / dims_; }

    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * dims_, dims_};
    }

    const std::vector<ColumnStats>& columns() const { return columns_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t dims_ = 0;
    std::vector<double> values_;  // rows * dims, row-major
    std::vector<ColumnStats> columns_;
};

/// Builds a dataset from raw rows: each column is min-max normalized to
/// [0, 1]; a constant column maps to 0.5 everywhere.
Dataset normalize_rows(std::size_t dims, const std::vector<double>& raw,
                       std::vector<std::string> names);

/// Samples an equi-correlated Gaussian and normalizes it.
Dataset generate_gaussian(const GaussianSpec& spec);

/// Loads a CSV file (comma separated, optional single header line).
/// Ragged rows and unparseable fields raise errors naming row and column.
Dataset load_csv(const std::string& path, bool has_header);

/// Writes the normalized table as CSV with a header row. Deterministic
/// formatting, so identical datasets produce identical bytes.
void save_csv(const Dataset& ds, const std::string& path);

/// Exact fraction of rows matched by q (full scan).
double true_selectivity(const Dataset& ds, const RangeQuery& q);

/// Pearson correlation between two columns of the normalized table.
double column_correlation(const Dataset& ds, std::size_t a, std::size_t b);

}  // namespace rangesel
