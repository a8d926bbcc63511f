#include "rangesel/checkpoint.hpp"

#include <json.hpp>

#include "rangesel/baselines.hpp"
#include "rangesel/io_util.hpp"
#include "rangesel/mlp.hpp"
#include "rangesel/nn_estimators.hpp"

namespace rangesel {

namespace {

nlohmann::json hist_payload(const GridHistogramEstimator& h) {
    nlohmann::json j;
    j["dims"] = h.dims();
    j["buckets"] = h.buckets_per_dim();
    j["rows"] = h.rows();
    j["grid"] = h.prefix();
    return j;
}

std::unique_ptr<GridHistogramEstimator> hist_from(const nlohmann::json& j) {
    return std::make_unique<GridHistogramEstimator>(
        j.at("dims").get<std::size_t>(), j.at("buckets").get<std::size_t>(),
        j.at("grid").get<std::vector<double>>(), j.at("rows").get<std::size_t>());
}

}  // namespace

std::string estimator_to_json(const SelectivityEstimator& est, const std::string& config_hash) {
    nlohmann::json j;
    j["kind"] = est.kind();
    j["name"] = est.name();
    j["config_hash"] = config_hash;

    const std::string kind = est.kind();
    if (kind == "direct" || kind == "selfcon") {
        const auto& d = dynamic_cast<const DirectNnEstimator&>(est);
        j["model"] = nlohmann::json::parse(mlp_to_json(d.model()));
        j["log_space"] = d.log_space();
    } else if (kind == "cdf") {
        const auto& c = dynamic_cast<const CdfNnEstimator&>(est);
        j["model"] = nlohmann::json::parse(mlp_to_json(c.model()));
    } else if (kind == "hist") {
        const auto& h = dynamic_cast<const GridHistogramEstimator&>(est);
        j["hist"] = hist_payload(h);
    } else if (kind == "sample") {
        const auto& s = dynamic_cast<const RowSampleEstimator&>(est);
        j["dims"] = s.dims();
        j["rows"] = s.sample_rows();
    } else if (kind == "poly") {
        const auto& p = dynamic_cast<const PolynomialEstimator&>(est);
        j["dims"] = p.dims();
        j["degree"] = p.degree();
        j["coef"] = p.coefficients();
    } else if (kind == "leo") {
        const auto& l = dynamic_cast<const LeoEstimator&>(est);
        j["hist"] = hist_payload(l.base());
        j["axis"] = l.axis();
        j["keys"] = l.keys();
        j["ratios"] = l.ratios();
    } else {
        throw std::invalid_argument("cannot serialize estimator kind: " + kind);
    }
    return j.dump();
}

void save_estimator(const SelectivityEstimator& est, const std::string& path,
                    const std::string& config_hash) {
    write_file(path, estimator_to_json(est, config_hash) + "\n");
}

EstimatorPtr estimator_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();

    EstimatorPtr out;
    if (kind == "direct" || kind == "selfcon") {
        out = std::make_unique<DirectNnEstimator>(mlp_from_json_text(j.at("model").dump()),
                                                  j.at("log_space").get<bool>(), kind);
    } else if (kind == "cdf") {
        out = std::make_unique<CdfNnEstimator>(mlp_from_json_text(j.at("model").dump()));
    } else if (kind == "hist") {
        out = hist_from(j.at("hist"));
    } else if (kind == "sample") {
        out = std::make_unique<RowSampleEstimator>(j.at("dims").get<std::size_t>(),
                                                   j.at("rows").get<std::vector<double>>());
    } else if (kind == "poly") {
        out = std::make_unique<PolynomialEstimator>(j.at("dims").get<std::size_t>(),
                                                    j.at("degree").get<std::size_t>(),
                                                    j.at("coef").get<std::vector<double>>());
    } else if (kind == "leo") {
        std::shared_ptr<const GridHistogramEstimator> base = hist_from(j.at("hist"));
        out = std::make_unique<LeoEstimator>(std::move(base), j.at("axis").get<std::size_t>(),
                                             j.at("keys").get<std::vector<double>>(),
                                             j.at("ratios").get<std::vector<double>>());
    } else {
        throw std::invalid_argument("unknown estimator kind in checkpoint: " + kind);
    }
    out->set_name(j.value("name", std::string{}));
    return out;
}

EstimatorPtr load_estimator(const std::string& path) {
    return estimator_from_json(read_file(path));
}

}  // namespace rangesel
