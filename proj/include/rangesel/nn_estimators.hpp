#pragma once

#include <memory>
#include <vector>

#include "rangesel/estimator.hpp"
#include "rangesel/expansion.hpp"
#include "rangesel/mlp.hpp"
#include "rangesel/workload.hpp"

namespace rangesel {

/// Flattened encoding [lo_1, hi_1, ..., lo_d, hi_d]; unconstrained columns
/// encode as (0, 1).
std::vector<double> encode_query(const RangeQuery& q);
void encode_query_into(const RangeQuery& q, std::vector<double>& out);

/// Encodes the one-sided query (0, v_i] per column, the shape used to read
/// CDF values out of a direct model.
void encode_onesided_into(std::span<const double> vertex, std::vector<double>& out);

/// Direct regression model: one forward pass per estimate over the flattened
/// encoding. log_space models emit log selectivity and exponentiate here.
class DirectNnEstimator : public SelectivityEstimator {
public:
    DirectNnEstimator(MlpModel m, bool log_space, std::string kind_tag = "direct");

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return kind_tag_; }

    const MlpModel& model() const { return model_; }
    bool log_space() const { return log_space_; }

private:
    MlpModel model_;
    bool log_space_;
    std::string kind_tag_;
};

/// CDF-model estimator: the network learns the joint CDF at a point, and a
/// query estimate is the signed sum of CDF values over the query's vertex
/// expansion. Additivity over axis splits holds by construction.
class CdfNnEstimator : public SelectivityEstimator {
public:
    explicit CdfNnEstimator(MlpModel m);

    double estimate(const RangeQuery& q) const override;
    std::string kind() const override { return "cdf"; }

    /// CDF value at a point (all columns one-sided at the coordinates).
    double cdf_at(std::span<const double> coords) const;

    const MlpModel& model() const { return model_; }

private:
    MlpModel model_;
};

struct NnTrainResult {
    std::unique_ptr<SelectivityEstimator> estimator;
    TrainTrace trace;
    std::size_t expansions_computed = 0;
};

/// Shared vertex expansions for one workload, computed once and reused
/// across epochs and across estimators trained on the same workload.
class ExpansionCache {
public:
    /// Returns expansions for the workload's queries, computing them on the
    /// first request for a given query set.
    const std::vector<CdfVertexExpansion>& get(const Workload& w, std::size_t dims);

    std::size_t computed() const { return computed_; }

private:
    std::uint64_t key_ = 0;
    std::size_t dims_ = 0;
    bool filled_ = false;
    std::vector<CdfVertexExpansion> cache_;
    std::size_t computed_ = 0;
};

/// Trains the direct regression model. cfg.loss picks the head: mse trains a
/// sigmoid head on selectivities, msle and qerror train an identity head on
/// log selectivities (qerror optimizes its logarithmic surrogate).
NnTrainResult train_direct(std::size_t dims, const Workload& train, const TrainConfig& cfg);

/// Trains the CDF model end to end with squared error on the aggregated
/// query estimates. Only mse is accepted: the signed vertex sum can be
/// negative before training converges, so logarithmic losses are undefined.
/// Vertex expansions are precomputed once per workload unless cache is null
/// and precompute is off.
NnTrainResult train_cdf_model(std::size_t dims, const Workload& train, const TrainConfig& cfg,
                              bool precompute_expansions = true,
                              ExpansionCache* cache = nullptr);

/// Self-consistency training options. Candidate weights for the two extra
/// terms come from {0.1, 1, 10, 100}.
struct SelfConsistencyConfig {
    double omega1 = 1.0;  // weight of the CDF-path prediction loss
    double omega2 = 1.0;  // weight of the direct-vs-CDF-path consistency loss
    std::size_t consistency_batch = 128;
    WorkloadSpec consistency_sampler;  // unlabeled query source, no dataset access
};

/// Trains a direct model with two extra loss terms tying its one-sided CDF
/// readouts to its own direct predictions: the training loss is
///   L = L_direct + omega1 * L_cdf_path + omega2 * L_consistency
/// where L_cdf_path is the batch RMSE of the CDF-aggregated prediction
/// against the true label and L_consistency is the mean squared difference
/// between direct and CDF-aggregated predictions on freshly sampled
/// unlabeled queries. Gradients flow through both branches. Inference is
/// identical to the plain direct model. With omega1 = omega2 = 0 the
/// parameter trajectory is bitwise identical to train_direct.
NnTrainResult train_selfconsistent(std::size_t dims, const Workload& train,
                                   const TrainConfig& cfg, const SelfConsistencyConfig& sc,
                                   ExpansionCache* cache = nullptr);

}  // namespace rangesel
