#pragma once

#include <memory>
#include <string>

#include "rangesel/estimator.hpp"

namespace rangesel {

/// Serializes any estimator to a self-contained JSON checkpoint tagged with
/// its kind and name. config_hash is embedded verbatim for provenance.
std::string estimator_to_json(const SelectivityEstimator& est, const std::string& config_hash);

void save_estimator(const SelectivityEstimator& est, const std::string& path,
                    const std::string& config_hash);

/// Reconstructs an estimator from a checkpoint; the kind tag dispatches to
/// the matching type. Unknown kinds or malformed payloads raise errors.
EstimatorPtr load_estimator(const std::string& path);
EstimatorPtr estimator_from_json(const std::string& text);

}  // namespace rangesel
