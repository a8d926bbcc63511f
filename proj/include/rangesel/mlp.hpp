#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rangesel {

enum class OutputActivation { Identity, Sigmoid };
enum class LossKind { Mse, Msle, Qerror };
enum class OptimizerKind { Sgd, Adam };

LossKind loss_from_string(const std::string& s);
std::string to_string(LossKind k);
OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct TrainConfig {
    std::vector<std::size_t> hidden{128, 128};
    LossKind loss = LossKind::Mse;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double clip_floor = 1e-5;
    std::uint64_t seed = 1;
};

struct MlpWorkspace;
struct Gradients;

/// Fully connected ReLU network with a scalar head. Hidden activations are
/// ReLU; the output head is identity or sigmoid.
class MlpModel {
public:
    MlpModel() = default;

    /// Glorot-uniform initialization, deterministic per seed.
    MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden,
             OutputActivation out_act, std::uint64_t seed);

    std::size_t input_dim() const { return layer_sizes_.empty() ? 0 : layer_sizes_.front(); }
    std::size_t n_layers() const { return weights_.size(); }
    const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
    OutputActivation output_activation() const { return out_act_; }

    double forward(std::span<const double> x) const;
    double forward(std::span<const double> x, MlpWorkspace& ws) const;

    /// Accumulates dLoss/dParams into g given dLoss/dOutput (the activated
    /// scalar output). ws must hold the activations of the matching forward.
    void backward(MlpWorkspace& ws, double dloss_doutput, Gradients& g) const;

    std::size_t param_count() const;
    std::vector<double> flatten_params() const;
    void set_params(std::span<const double> flat);
    void apply_update(const Gradients& g, double scale);

    const std::vector<std::vector<double>>& weights() const { return weights_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

private:
    std::vector<std::size_t> layer_sizes_;  // input, hidden..., 1
    std::vector<std::vector<double>> weights_;  // per layer, row-major out x in
    std::vector<std::vector<double>> biases_;
    OutputActivation out_act_ = OutputActivation::Identity;

    friend struct MlpWorkspace;
    friend struct Gradients;
};

/// Per-layer activation storage reused across forward/backward passes.
struct MlpWorkspace {
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post-activation per layer
    std::vector<double> input;
    std::vector<double> delta;
    std::vector<double> delta_next;

    void resize_for(const MlpModel& m);
};

struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void resize_for(const MlpModel& m);
    void zero();
    void add_scaled(const Gradients& other, double s);
    void scale(double s);
};

/// SGD or Adam (beta1 0.9, beta2 0.999, eps 1e-8) on mean-batch gradients.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate);

    void step(MlpModel& m, const Gradients& g);

private:
    OptimizerKind kind_;
    double lr_;
    std::size_t t_ = 0;
    Gradients m_, v_, update_;
    bool state_ready_ = false;
};

/// Loss in selectivity space. msle and qerror floor both sides at clip_floor;
/// mse uses raw values.
double loss_value(LossKind kind, double prediction, double label, double clip_floor);

/// Loss and gradient wrt the model's activated output, composing the output
/// head with the configured loss: identity heads train msle/qerror in log
/// space (the output is the log selectivity), sigmoid heads in linear space.
/// Flooring clamps with zero gradient.
struct LossGrad {
    double loss = 0.0;
    double dloss_doutput = 0.0;
};
LossGrad train_loss_grad(OutputActivation head, LossKind kind, double output, double label,
                         double clip_floor);

/// Maps an activated model output to a selectivity estimate (exponentiates
/// identity-head log predictions when the loss family is logarithmic).
double output_to_selectivity(OutputActivation head, LossKind kind, double output);

struct TrainSample {
    std::vector<double> x;
    double y = 0.0;
};

struct TrainTrace {
    std::vector<double> epoch_loss;  // mean optimized loss per epoch
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& what)
        : std::runtime_error(what), epoch(epoch) {}
    std::size_t epoch;
};

/// Mini-batch supervised fit of y against x. Shuffling, initialization and
/// updates are fully determined by cfg.seed; fixed seeds give bitwise
/// identical parameter trajectories. Non-finite batch loss raises
/// TrainingDiverged with the epoch index.
TrainTrace train(MlpModel& m, const std::vector<TrainSample>& samples, const TrainConfig& cfg);

/// Mean loss over a batch, as optimized by train() for this model head.
double batch_loss(const MlpModel& m, std::span<const TrainSample> samples, LossKind kind,
                  double clip_floor);

/// Flattened analytic gradient of batch_loss wrt all parameters.
std::vector<double> analytic_gradient(const MlpModel& m, std::span<const TrainSample> samples,
                                      LossKind kind, double clip_floor);

/// Central finite differences of batch_loss, step h per parameter.
std::vector<double> finite_difference_gradient(const MlpModel& m,
                                               std::span<const TrainSample> samples, LossKind kind,
                                               double clip_floor, double h = 1e-5);

/// Checkpoint serialization. Round-trip preserves outputs exactly.
std::string mlp_to_json(const MlpModel& m);
MlpModel mlp_from_json_text(const std::string& text);

}  // namespace rangesel
