#include "rangesel/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "rangesel/expansion.hpp"
#include "rangesel/nn_estimators.hpp"
#include "rangesel/rng.hpp"

namespace rangesel {

GridHistogramEstimator::GridHistogramEstimator(std::size_t dims, std::size_t buckets_per_dim,
                                               std::vector<double> prefix, std::size_t rows)
    : dims_(dims), buckets_(buckets_per_dim), prefix_(std::move(prefix)), rows_(rows) {
    if (dims_ == 0 || buckets_ == 0) throw std::invalid_argument("histogram shape is empty");
    std::size_t nodes = 1;
    for (std::size_t j = 0; j < dims_; ++j) nodes *= buckets_ + 1;
    if (prefix_.size() != nodes)
        throw std::invalid_argument("histogram grid size does not match its shape");
    if (rows_ == 0) throw std::invalid_argument("histogram needs a nonempty table");
}

double GridHistogramEstimator::cdf_at(std::span<const double> coords) const {
    if (coords.size() != dims_)
        throw std::invalid_argument("point dimensionality does not match the histogram");

    // per-axis node position: fixed index, or a bucket straddle to blend
    thread_local std::vector<std::size_t> base_idx, dyn_axis, dyn_lo;
    thread_local std::vector<double> dyn_frac;
    base_idx.assign(dims_, 0);
    dyn_axis.clear();
    dyn_lo.clear();
    dyn_frac.clear();

    const double b = static_cast<double>(buckets_);
    for (std::size_t j = 0; j < dims_; ++j) {
        const double v = coords[j];
        if (v <= 0.0) return 0.0;  // the zero plane of the grid holds no mass
        if (v >= 1.0) {
            base_idx[j] = buckets_;
            continue;
        }
        const double t = v * b;
        double i0 = std::floor(t);
        if (i0 >= b) i0 = b - 1.0;
        const double frac = t - i0;
        if (frac == 0.0) {
            base_idx[j] = static_cast<std::size_t>(i0);
        } else {
            dyn_axis.push_back(j);
            dyn_lo.push_back(static_cast<std::size_t>(i0));
            dyn_frac.push_back(frac);
        }
    }

    // row-major strides, axis 0 slowest
    std::size_t offset = 0, stride = 1;
    thread_local std::vector<std::size_t> strides;
    strides.assign(dims_, 0);
    for (std::size_t j = dims_; j-- > 0;) {
        strides[j] = stride;
        stride *= buckets_ + 1;
    }
    for (std::size_t j = 0; j < dims_; ++j) offset += base_idx[j] * strides[j];

    const std::size_t n_dyn = dyn_axis.size();
    double acc = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_dyn); ++mask) {
        double w = 1.0;
        std::size_t off = offset;
        for (std::size_t k = 0; k < n_dyn; ++k) {
            const bool upper = (mask >> k) & 1;
            w *= upper ? dyn_frac[k] : 1.0 - dyn_frac[k];
            off += (dyn_lo[k] + (upper ? 1 : 0)) * strides[dyn_axis[k]];
        }
        acc += w * prefix_[off];
    }
    return acc / static_cast<double>(rows_);
}

double GridHistogramEstimator::estimate(const RangeQuery& q) const {
    const CdfVertexExpansion e = expand_query(q, dims_);
    count_calls(e.terms.size());
    double acc = 0.0;
    for (const auto& term : e.terms)
        acc += static_cast<double>(term.sign) * cdf_at(term.coords);
    return acc;
}

std::unique_ptr<GridHistogramEstimator> build_grid_histogram(const Dataset& ds,
                                                             std::size_t buckets_per_dim,
                                                             std::size_t max_cells) {
    const std::size_t d = ds.dims();
    const std::size_t b = buckets_per_dim;
    if (b == 0) throw std::invalid_argument("need at least one bucket per dimension");

    std::size_t cells = 1, nodes = 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (cells > max_cells / b || nodes > (4 * max_cells) / (b + 1))
            throw std::invalid_argument(
                std::to_string(b) + " buckets per dimension over " + std::to_string(d) +
                " dimensions exceeds the cell budget of " + std::to_string(max_cells));
        cells *= b;
        nodes *= b + 1;
    }
    if (cells > max_cells || nodes > 4 * max_cells)
        throw std::invalid_argument(
            std::to_string(b) + " buckets per dimension over " + std::to_string(d) +
            " dimensions exceeds the cell budget of " + std::to_string(max_cells));

    std::vector<double> grid(nodes, 0.0);

    std::vector<std::size_t> strides(d);
    std::size_t stride = 1;
    for (std::size_t j = d; j-- > 0;) {
        strides[j] = stride;
        stride *= b + 1;
    }

    const double bf = static_cast<double>(b);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto row = ds.row(r);
        std::size_t idx = 0;
        for (std::size_t j = 0; j < d; ++j) {
            double a = std::ceil(row[j] * bf);
            if (a < 1.0) a = 1.0;
            if (a > bf) a = bf;
            idx += static_cast<std::size_t>(a) * strides[j];
        }
        grid[idx] += 1.0;
    }

    // cumulative counts along every axis; the zero plane stays empty
    for (std::size_t axis = 0; axis < d; ++axis) {
        const std::size_t s = strides[axis];
        for (std::size_t n = 0; n < nodes; ++n) {
            const std::size_t i = (n / s) % (b + 1);
            if (i >= 1) grid[n] += grid[n - s];
        }
    }

    return std::make_unique<GridHistogramEstimator>(d, b, std::move(grid), ds.rows());
}

RowSampleEstimator::RowSampleEstimator(std::size_t dims, std::vector<double> rows)
    : dims_(dims), rows_(std::move(rows)) {
    if (dims_ == 0) throw std::invalid_argument("sample needs at least one column");
    if (rows_.empty() || rows_.size() % dims_ != 0)
        throw std::invalid_argument("sample rows do not form whole rows");
}

double RowSampleEstimator::estimate(const RangeQuery& q) const {
    if (q.dims() != dims_)
        throw std::invalid_argument("query dimensionality does not match the sample");
    count_calls(1);
    const std::size_t n = sample_size();
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = rows_.data() + r * dims_;
        bool in = true;
        for (std::size_t j = 0; j < dims_ && in; ++j) {
            if (!q.bounds[j]) continue;
            in = row[j] > q.bounds[j]->lo && row[j] <= q.bounds[j]->hi;
        }
        hits += in ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

std::unique_ptr<RowSampleEstimator> build_sampling_estimator(const Dataset& ds,
                                                             std::size_t sample_size,
                                                             std::uint64_t seed) {
    if (sample_size == 0) throw std::invalid_argument("sample size must be positive");
    const std::size_t n = std::min(sample_size, ds.rows());

    std::vector<std::size_t> order(ds.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (n < ds.rows()) {
        Rng rng(derive_seed(seed, "rowsample"));
        for (std::size_t j = 0; j < n; ++j)
            std::swap(order[j], order[j + rng.index(order.size() - j)]);
    }

    std::vector<double> rows;
    rows.reserve(n * ds.dims());
    for (std::size_t j = 0; j < n; ++j) {
        const auto row = ds.row(order[j]);
        rows.insert(rows.end(), row.begin(), row.end());
    }
    return std::make_unique<RowSampleEstimator>(ds.dims(), std::move(rows));
}

PolynomialEstimator::PolynomialEstimator(std::size_t dims, std::size_t degree,
                                         std::vector<double> coef)
    : dims_(dims), degree_(degree), coef_(std::move(coef)) {
    if (degree_ > 2) throw std::invalid_argument("polynomial degree above 2 is not supported");
    const std::size_t expect = features(std::vector<double>(2 * dims_, 0.0), degree_).size();
    if (coef_.size() != expect)
        throw std::invalid_argument("coefficient count does not match the feature expansion");
}

std::vector<double> PolynomialEstimator::features(std::span<const double> encoded,
                                                  std::size_t degree) {
    if (degree > 2) throw std::invalid_argument("polynomial degree above 2 is not supported");
    std::vector<double> f;
    const std::size_t m = encoded.size();
    std::size_t total = 1;
    if (degree >= 1) total += m;
    if (degree >= 2) total += m * (m + 1) / 2;
    f.reserve(total);
    f.push_back(1.0);
    if (degree >= 1) f.insert(f.end(), encoded.begin(), encoded.end());
    if (degree >= 2)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) f.push_back(encoded[i] * encoded[j]);
    return f;
}

double PolynomialEstimator::estimate(const RangeQuery& q) const {
    if (q.dims() != dims_)
        throw std::invalid_argument("query dimensionality does not match the model");
    count_calls(1);
    const std::vector<double> f = features(encode_query(q), degree_);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * coef_[i];
    return acc;
}

std::unique_ptr<PolynomialEstimator> fit_parametric(std::size_t dims, const Workload& train,
                                                    std::size_t degree) {
    if (train.size() == 0) throw std::invalid_argument("fitting needs at least one sample");

    std::vector<double> x;
    std::vector<std::vector<double>> rows_f;
    rows_f.reserve(train.size());
    for (const auto& item : train.items) {
        if (item.query.dims() != dims)
            throw std::invalid_argument("workload query dimensionality mismatch");
        encode_query_into(item.query, x);
        rows_f.push_back(PolynomialEstimator::features(x, degree));
    }

    const std::size_t p = rows_f.front().size();
    std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
    for (std::size_t r = 0; r < rows_f.size(); ++r) {
        const auto& f = rows_f[r];
        const double y = train.items[r].selectivity;
        for (std::size_t i = 0; i < p; ++i) {
            xty[i] += f[i] * y;
            for (std::size_t j = i; j < p; ++j) xtx[i * p + j] += f[i] * f[j];
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        xtx[i * p + i] += 1e-8;
        for (std::size_t j = 0; j < i; ++j) xtx[i * p + j] = xtx[j * p + i];
    }

    // Cholesky: xtx = L L^T
    std::vector<double> chol(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = xtx[i * p + j];
            for (std::size_t k = 0; k < j; ++k) acc -= chol[i * p + k] * chol[j * p + k];
            if (i == j) {
                if (acc <= 0.0) throw std::runtime_error("normal equations are not positive definite");
                chol[i * p + i] = std::sqrt(acc);
            } else {
                chol[i * p + j] = acc / chol[j * p + j];
            }
        }
    }
    std::vector<double> beta(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double acc = xty[i];
        for (std::size_t k = 0; k < i; ++k) acc -= chol[i * p + k] * beta[k];
        beta[i] = acc / chol[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) {
        double acc = beta[i];
        for (std::size_t k = i + 1; k < p; ++k) acc -= chol[k * p + i] * beta[k];
        beta[i] = acc / chol[i * p + i];
    }

    return std::make_unique<PolynomialEstimator>(dims, degree, std::move(beta));
}

LeoEstimator::LeoEstimator(std::shared_ptr<const GridHistogramEstimator> base, std::size_t axis,
                           std::vector<double> keys, std::vector<double> ratios)
    : base_(std::move(base)), axis_(axis), keys_(std::move(keys)), ratios_(std::move(ratios)) {
    if (!base_) throw std::invalid_argument("correction table needs a base histogram");
    if (keys_.size() != ratios_.size())
        throw std::invalid_argument("correction keys and ratios must be parallel");
    if (!std::is_sorted(keys_.begin(), keys_.end()))
        throw std::invalid_argument("correction keys must be sorted");
}

double LeoEstimator::ratio_at(double key) const {
    if (keys_.empty()) return 1.0;
    if (key <= keys_.front()) return ratios_.front();
    if (key >= keys_.back()) return ratios_.back();
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    const std::size_t hi = static_cast<std::size_t>(it - keys_.begin());
    if (keys_[hi] == key) return ratios_[hi];
    const std::size_t lo = hi - 1;
    const double t = (key - keys_[lo]) / (keys_[hi] - keys_[lo]);
    return ratios_[lo] + t * (ratios_[hi] - ratios_[lo]);
}

double LeoEstimator::estimate(const RangeQuery& q) const {
    count_calls(1);
    const double h = base_->estimate(q);
    const double key = q.bounds.size() > axis_ && q.bounds[axis_] ? q.bounds[axis_]->hi : 1.0;
    return h * ratio_at(key);
}

std::unique_ptr<LeoEstimator> build_leo(std::shared_ptr<const GridHistogramEstimator> base,
                                        const Workload& observed, std::size_t axis,
                                        double floor_sel) {
    if (!base) throw std::invalid_argument("correction table needs a base histogram");
    std::map<double, std::pair<double, std::size_t>> acc;
    for (const auto& item : observed.items) {
        const double h = base->estimate(item.query);
        if (h < floor_sel) continue;
        const double key =
            item.query.bounds.size() > axis && item.query.bounds[axis] ? item.query.bounds[axis]->hi
                                                                       : 1.0;
        auto& slot = acc[key];
        slot.first += item.selectivity / h;
        slot.second += 1;
    }
    std::vector<double> keys, ratios;
    keys.reserve(acc.size());
    ratios.reserve(acc.size());
    for (const auto& [key, slot] : acc) {
        keys.push_back(key);
        ratios.push_back(slot.first / static_cast<double>(slot.second));
    }
    return std::make_unique<LeoEstimator>(std::move(base), axis, std::move(keys),
                                          std::move(ratios));
}

}  // namespace rangesel
