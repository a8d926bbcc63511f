#include "rangesel/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rangesel/io_util.hpp"
#include "rangesel/rng.hpp"

namespace rangesel {

Dataset::Dataset(std::size_t dims, std::vector<double> values, std::vector<ColumnStats> columns)
    : dims_(dims), values_(std::move(values)), columns_(std::move(columns)) {
    if (dims_ == 0) throw std::invalid_argument("dataset needs at least one column");
    if (values_.empty() || values_.size() % dims_ != 0)
        throw std::invalid_argument("dataset values do not form whole rows");
    if (columns_.size() != dims_) throw std::invalid_argument("column metadata size mismatch");
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("dataset coordinates must lie in [0, 1]");
}

Dataset normalize_rows(std::size_t dims, const std::vector<double>& raw,
                       std::vector<std::string> names) {
    if (dims == 0) throw std::invalid_argument("dataset needs at least one column");
    if (raw.empty() || raw.size() % dims != 0)
        throw std::invalid_argument("raw values do not form whole rows");
    const std::size_t rows = raw.size() / dims;

    std::vector<ColumnStats> cols(dims);
    for (std::size_t c = 0; c < dims; ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            lo = std::min(lo, raw[r * dims + c]);
            hi = std::max(hi, raw[r * dims + c]);
        }
        cols[c].raw_min = lo;
        cols[c].raw_max = hi;
        cols[c].name = c < names.size() ? names[c] : "x" + std::to_string(c);
    }

    std::vector<double> vals(raw.size());
    for (std::size_t c = 0; c < dims; ++c) {
        const double lo = cols[c].raw_min;
        const double span = cols[c].raw_max - lo;
        for (std::size_t r = 0; r < rows; ++r) {
            // constant columns carry no information; park them mid-domain
            vals[r * dims + c] = span == 0.0 ? 0.5 : (raw[r * dims + c] - lo) / span;
        }
    }
    return Dataset(dims, std::move(vals), std::move(cols));
}

Dataset generate_gaussian(const GaussianSpec& spec) {
    if (spec.dims == 0) throw std::invalid_argument("gaussian spec needs dims >= 1");
    if (spec.rows == 0) throw std::invalid_argument("gaussian spec needs rows >= 1");
    if (!(spec.correlation >= 0.0 && spec.correlation < 1.0))
        throw std::invalid_argument("gaussian correlation must lie in [0, 1)");

    // Equi-correlated covariance (1-rho) I + rho 11^T factors through a
    // shared component: x_i = sqrt(rho) z0 + sqrt(1-rho) z_i.
    const double shared = std::sqrt(spec.correlation);
    const double indep = std::sqrt(1.0 - spec.correlation);

    Rng rng(derive_seed(spec.seed, "gaussian"));
    std::vector<double> raw(spec.rows * spec.dims);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        const double z0 = rng.normal();
        for (std::size_t c = 0; c < spec.dims; ++c)
            raw[r * spec.dims + c] = shared * z0 + indep * rng.normal();
    }

    std::vector<std::string> names(spec.dims);
    for (std::size_t c = 0; c < spec.dims; ++c) names[c] = "x" + std::to_string(c);
    return normalize_rows(spec.dims, raw, std::move(names));
}

namespace {

bool looks_numeric(const std::string& field) {
    if (field.empty()) return false;
    char* end = nullptr;
    std::strtod(field.c_str(), &end);
    return end != nullptr && *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw std::runtime_error("empty csv: " + path);

    std::size_t first_data = 0;
    std::vector<std::string> names;
    if (has_header) {
        names = split_csv_line(lines[0]);
        first_data = 1;
    }
    if (first_data >= lines.size()) throw std::runtime_error("csv has no data rows: " + path);

    const std::size_t dims = split_csv_line(lines[first_data]).size();
    if (names.empty()) {
        for (std::size_t c = 0; c < dims; ++c) names.push_back("x" + std::to_string(c));
    }
    if (names.size() != dims)
        throw std::runtime_error("csv header width differs from data width: " + path);

    std::vector<double> raw;
    raw.reserve((lines.size() - first_data) * dims);
    for (std::size_t i = first_data; i < lines.size(); ++i) {
        if (lines[i].empty() && i + 1 == lines.size()) break;  // trailing newline
        const auto fields = split_csv_line(lines[i]);
        const std::size_t row_no = i - first_data + 1;
        if (fields.size() != dims)
            throw std::runtime_error(path + ": ragged csv at row " + std::to_string(row_no) +
                                     ": expected " + std::to_string(dims) + " fields, got " +
                                     std::to_string(fields.size()));
        for (std::size_t c = 0; c < dims; ++c) {
            if (!looks_numeric(fields[c]))
                throw std::runtime_error(path + ": cannot parse row " + std::to_string(row_no) +
                                         ", column " + std::to_string(c + 1) + ": '" + fields[c] +
                                         "'");
            raw.push_back(std::strtod(fields[c].c_str(), nullptr));
        }
    }
    if (raw.empty()) throw std::runtime_error("csv has no data rows: " + path);
    return normalize_rows(dims, raw, std::move(names));
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::string out;
    out.reserve(ds.values().size() * 20);
    for (std::size_t c = 0; c < ds.dims(); ++c) {
        if (c) out += ',';
        out += ds.columns()[c].name;
    }
    out += '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const auto row = ds.row(r);
        for (std::size_t c = 0; c < ds.dims(); ++c) {
            if (c) out += ',';
            out += format_double(row[c]);
        }
        out += '\n';
    }
    write_file(path, out);
}

double true_selectivity(const Dataset& ds, const RangeQuery& q) {
    if (q.dims() != ds.dims())
        throw std::invalid_argument("query dims " + std::to_string(q.dims()) +
                                    " do not match dataset dims " + std::to_string(ds.dims()));

    // compact constrained-column view keeps the scan tight
    std::vector<std::size_t> cols;
    std::vector<double> lo, hi;
    for (std::size_t c = 0; c < q.bounds.size(); ++c) {
        if (!q.bounds[c]) continue;
        cols.push_back(c);
        lo.push_back(q.bounds[c]->lo);
        hi.push_back(q.bounds[c]->hi);
    }

    const double* data = ds.values().data();
    const std::size_t dims = ds.dims();
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const double* row = data + r * dims;
        bool ok = true;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double x = row[cols[k]];
            if (x <= lo[k] || x > hi[k]) {
                ok = false;
                break;
            }
        }
        hits += ok;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.rows());
}

double column_correlation(const Dataset& ds, std::size_t a, std::size_t b) {
    if (a >= ds.dims() || b >= ds.dims()) throw std::invalid_argument("column out of range");
    const std::size_t n = ds.rows();
    double ma = 0.0, mb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        ma += ds.row(r)[a];
        mb += ds.row(r)[b];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double da = ds.row(r)[a] - ma;
        const double db = ds.row(r)[b] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace rangesel
