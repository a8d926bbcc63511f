#include <json.hpp>

#include "rangesel/mlp.hpp"

namespace rangesel {

namespace {

const char* activation_name(OutputActivation a) {
    return a == OutputActivation::Sigmoid ? "sigmoid" : "identity";
}

OutputActivation activation_from(const std::string& s) {
    if (s == "sigmoid") return OutputActivation::Sigmoid;
    if (s == "identity") return OutputActivation::Identity;
    throw std::invalid_argument("unknown output activation: " + s);
}

}  // namespace

std::string mlp_to_json(const MlpModel& m) {
    nlohmann::json j;
    j["layers"] = m.layer_sizes();
    j["output_activation"] = activation_name(m.output_activation());
    j["weights"] = m.weights();
    j["biases"] = m.biases();
    return j.dump();
}

MlpModel mlp_from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const auto sizes = j.at("layers").get<std::vector<std::size_t>>();
    if (sizes.size() < 2 || sizes.back() != 1)
        throw std::invalid_argument("model checkpoint has malformed layer sizes");
    const std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
    MlpModel m(sizes.front(), hidden, activation_from(j.at("output_activation").get<std::string>()),
               0);

    const auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto biases = j.at("biases").get<std::vector<std::vector<double>>>();
    if (weights.size() != sizes.size() - 1 || biases.size() != sizes.size() - 1)
        throw std::invalid_argument("model checkpoint layer count mismatch");

    std::vector<double> flat;
    flat.reserve(m.param_count());
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (weights[l].size() != sizes[l] * sizes[l + 1] || biases[l].size() != sizes[l + 1])
            throw std::invalid_argument("model checkpoint parameter shape mismatch");
        flat.insert(flat.end(), weights[l].begin(), weights[l].end());
        flat.insert(flat.end(), biases[l].begin(), biases[l].end());
    }
    m.set_params(flat);
    return m;
}

}  // namespace rangesel
