#include "rangesel/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rangesel/rng.hpp"

namespace rangesel {

LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "msle") return LossKind::Msle;
    if (s == "qerror") return LossKind::Qerror;
    throw std::invalid_argument("unknown loss: " + s);
}

std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::Mse: return "mse";
        case LossKind::Msle: return "msle";
        case LossKind::Qerror: return "qerror";
    }
    return "?";
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

MlpModel::MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                   OutputActivation out_act, std::uint64_t seed)
    : out_act_(out_act) {
    if (input_dim == 0) throw std::invalid_argument("input_dim must be positive");
    layer_sizes_.push_back(input_dim);
    for (std::size_t h : hidden) {
        if (h == 0) throw std::invalid_argument("hidden layer width must be positive");
        layer_sizes_.push_back(h);
    }
    layer_sizes_.push_back(1);

    Rng rng(derive_seed(seed, "mlp-init"));
    for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
        const std::size_t fan_in = layer_sizes_[l];
        const std::size_t fan_out = layer_sizes_[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_in * fan_out);
        for (auto& v : w) v = rng.uniform(-limit, limit);
        weights_.push_back(std::move(w));
        biases_.emplace_back(fan_out, 0.0);
    }
}

void MlpWorkspace::resize_for(const MlpModel& m) {
    const auto& sizes = m.layer_sizes_;
    const std::size_t L = m.weights_.size();
    pre.resize(L);
    post.resize(L);
    std::size_t widest = sizes[0];
    for (std::size_t l = 0; l < L; ++l) {
        pre[l].resize(sizes[l + 1]);
        post[l].resize(sizes[l + 1]);
        widest = std::max(widest, sizes[l + 1]);
    }
    input.resize(sizes[0]);
    delta.resize(widest);
    delta_next.resize(widest);
}

void Gradients::resize_for(const MlpModel& m) {
    w.resize(m.weights_.size());
    b.resize(m.biases_.size());
    for (std::size_t l = 0; l < w.size(); ++l) {
        w[l].assign(m.weights_[l].size(), 0.0);
        b[l].assign(m.biases_[l].size(), 0.0);
    }
}

void Gradients::zero() {
    for (auto& layer : w) std::fill(layer.begin(), layer.end(), 0.0);
    for (auto& layer : b) std::fill(layer.begin(), layer.end(), 0.0);
}

void Gradients::add_scaled(const Gradients& other, double s) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i) w[l][i] += s * other.w[l][i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += s * other.b[l][i];
    }
}

void Gradients::scale(double s) {
    for (auto& layer : w)
        for (auto& v : layer) v *= s;
    for (auto& layer : b)
        for (auto& v : layer) v *= s;
}

double MlpModel::forward(std::span<const double> x, MlpWorkspace& ws) const {
    ws.resize_for(*this);
    std::copy(x.begin(), x.end(), ws.input.begin());

    const std::size_t L = weights_.size();
    const double* in = ws.input.data();
    std::size_t in_size = layer_sizes_[0];
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t out_size = layer_sizes_[l + 1];
        const double* w = weights_[l].data();
        const double* b = biases_[l].data();
        double* pre = ws.pre[l].data();
        double* post = ws.post[l].data();
        for (std::size_t o = 0; o < out_size; ++o) {
            double acc = b[o];
            const double* row = w + o * in_size;
            for (std::size_t i = 0; i < in_size; ++i) acc += row[i] * in[i];
            pre[o] = acc;
            post[o] = (l + 1 < L) ? (acc > 0.0 ? acc : 0.0) : acc;
        }
        in = post;
        in_size = out_size;
    }

    double out = ws.pre[L - 1][0];
    if (out_act_ == OutputActivation::Sigmoid) out = 1.0 / (1.0 + std::exp(-out));
    ws.post[L - 1][0] = out;
    return out;
}

double MlpModel::forward(std::span<const double> x) const {
    thread_local MlpWorkspace ws;
    return forward(x, ws);
}

void MlpModel::backward(MlpWorkspace& ws, double dloss_doutput, Gradients& g) const {
    const std::size_t L = weights_.size();

    double dz = dloss_doutput;
    if (out_act_ == OutputActivation::Sigmoid) {
        const double s = ws.post[L - 1][0];
        dz *= s * (1.0 - s);
    }

    ws.delta[0] = dz;
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t in_size = layer_sizes_[l];
        const std::size_t out_size = layer_sizes_[l + 1];
        const double* in = l == 0 ? ws.input.data() : ws.post[l - 1].data();
        double* gw = g.w[l].data();
        double* gb = g.b[l].data();
        for (std::size_t o = 0; o < out_size; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            double* row = gw + o * in_size;
            for (std::size_t i = 0; i < in_size; ++i) row[i] += d * in[i];
            gb[o] += d;
        }
        if (l == 0) break;

        // propagate through W^T and the ReLU mask of the previous layer
        const double* w = weights_[l].data();
        const double* pre_prev = ws.pre[l - 1].data();
        std::fill(ws.delta_next.begin(), ws.delta_next.begin() + in_size, 0.0);
        for (std::size_t o = 0; o < out_size; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            const double* row = w + o * in_size;
            for (std::size_t i = 0; i < in_size; ++i) ws.delta_next[i] += d * row[i];
        }
        for (std::size_t i = 0; i < in_size; ++i)
            ws.delta[i] = pre_prev[i] > 0.0 ? ws.delta_next[i] : 0.0;
    }
}

std::size_t MlpModel::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        n += weights_[l].size() + biases_[l].size();
    return n;
}

std::vector<double> MlpModel::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        flat.insert(flat.end(), weights_[l].begin(), weights_[l].end());
        flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
    }
    return flat;
}

void MlpModel::set_params(std::span<const double> flat) {
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (auto& v : weights_[l]) v = flat[k++];
        for (auto& v : biases_[l]) v = flat[k++];
    }
    if (k != flat.size()) throw std::invalid_argument("parameter vector size mismatch");
}

void MlpModel::apply_update(const Gradients& g, double scale) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (std::size_t i = 0; i < weights_[l].size(); ++i) weights_[l][i] += scale * g.w[l][i];
        for (std::size_t i = 0; i < biases_[l].size(); ++i) biases_[l][i] += scale * g.b[l][i];
    }
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::step(MlpModel& m, const Gradients& g) {
    if (kind_ == OptimizerKind::Sgd) {
        m.apply_update(g, -lr_);
        return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (!state_ready_) {
        m_.resize_for(m);
        v_.resize_for(m);
        update_.resize_for(m);
        state_ready_ = true;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    auto mix = [&](std::vector<double>& u, std::vector<double>& mm, std::vector<double>& vv,
                   const std::vector<double>& gg) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            mm[i] = beta1 * mm[i] + (1.0 - beta1) * gg[i];
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * gg[i] * gg[i];
            u[i] = (mm[i] / c1) / (std::sqrt(vv[i] / c2) + eps);
        }
    };
    for (std::size_t l = 0; l < g.w.size(); ++l) {
        mix(update_.w[l], m_.w[l], v_.w[l], g.w[l]);
        mix(update_.b[l], m_.b[l], v_.b[l], g.b[l]);
    }
    m.apply_update(update_, -lr_);
}

double loss_value(LossKind kind, double prediction, double label, double clip_floor) {
    switch (kind) {
        case LossKind::Mse: {
            const double d = prediction - label;
            return d * d;
        }
        case LossKind::Msle: {
            const double d =
                std::log(std::max(prediction, clip_floor)) - std::log(std::max(label, clip_floor));
            return d * d;
        }
        case LossKind::Qerror: {
            const double p = std::max(prediction, clip_floor);
            const double w = std::max(label, clip_floor);
            return std::max(p / w, w / p);
        }
    }
    return 0.0;
}

LossGrad train_loss_grad(OutputActivation head, LossKind kind, double output, double label,
                         double clip_floor) {
    LossGrad r;
    if (kind == LossKind::Mse) {
        const double d = output - label;
        r.loss = d * d;
        r.dloss_doutput = 2.0 * d;
        return r;
    }
    // msle, and qerror through its logarithmic surrogate
    const double target = std::log(std::max(label, clip_floor));
    if (head == OutputActivation::Identity) {
        // output already is the log selectivity
        const double lf = std::log(clip_floor);
        const double z = std::max(output, lf);
        const double d = z - target;
        r.loss = d * d;
        r.dloss_doutput = output < lf ? 0.0 : 2.0 * d;
    } else {
        const double p = std::max(output, clip_floor);
        const double d = std::log(p) - target;
        r.loss = d * d;
        r.dloss_doutput = output < clip_floor ? 0.0 : 2.0 * d / p;
    }
    return r;
}

double output_to_selectivity(OutputActivation head, LossKind kind, double output) {
    if (head == OutputActivation::Identity && kind != LossKind::Mse) return std::exp(output);
    return output;
}

double batch_loss(const MlpModel& m, std::span<const TrainSample> samples, LossKind kind,
                  double clip_floor) {
    MlpWorkspace ws;
    double acc = 0.0;
    for (const auto& s : samples) {
        const double out = m.forward(s.x, ws);
        acc += train_loss_grad(m.output_activation(), kind, out, s.y, clip_floor).loss;
    }
    return acc / static_cast<double>(samples.size());
}

std::vector<double> analytic_gradient(const MlpModel& m, std::span<const TrainSample> samples,
                                      LossKind kind, double clip_floor) {
    MlpWorkspace ws;
    Gradients g;
    g.resize_for(m);
    for (const auto& s : samples) {
        const double out = m.forward(s.x, ws);
        const LossGrad lg = train_loss_grad(m.output_activation(), kind, out, s.y, clip_floor);
        m.backward(ws, lg.dloss_doutput, g);
    }
    g.scale(1.0 / static_cast<double>(samples.size()));

    std::vector<double> flat;
    flat.reserve(m.param_count());
    for (std::size_t l = 0; l < g.w.size(); ++l) {
        flat.insert(flat.end(), g.w[l].begin(), g.w[l].end());
        flat.insert(flat.end(), g.b[l].begin(), g.b[l].end());
    }
    return flat;
}

std::vector<double> finite_difference_gradient(const MlpModel& m,
                                               std::span<const TrainSample> samples, LossKind kind,
                                               double clip_floor, double h) {
    MlpModel probe = m;
    std::vector<double> flat = m.flatten_params();
    std::vector<double> grad(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + h;
        probe.set_params(flat);
        const double up = batch_loss(probe, samples, kind, clip_floor);
        flat[i] = keep - h;
        probe.set_params(flat);
        const double down = batch_loss(probe, samples, kind, clip_floor);
        flat[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    probe.set_params(flat);
    return grad;
}

TrainTrace train(MlpModel& m, const std::vector<TrainSample>& samples, const TrainConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("training needs at least one sample");
    if (cfg.epochs == 0) return {};

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    MlpWorkspace ws;
    Gradients g;
    g.resize_for(m);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainTrace trace;
    trace.epoch_loss.reserve(cfg.epochs);
    const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        double epoch_acc = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            g.zero();
            double batch_acc = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const TrainSample& s = samples[order[k]];
                const double out = m.forward(s.x, ws);
                const LossGrad lg =
                    train_loss_grad(m.output_activation(), cfg.loss, out, s.y, cfg.clip_floor);
                m.backward(ws, lg.dloss_doutput, g);
                batch_acc += lg.loss;
            }
            const double n = static_cast<double>(end - start);
            if (!std::isfinite(batch_acc))
                throw TrainingDiverged(epoch, "training loss diverged at epoch " +
                                                  std::to_string(epoch));
            g.scale(1.0 / n);
            opt.step(m, g);
            epoch_acc += batch_acc;
        }
        trace.epoch_loss.push_back(epoch_acc / static_cast<double>(order.size()));
    }
    return trace;
}

}  // namespace rangesel
