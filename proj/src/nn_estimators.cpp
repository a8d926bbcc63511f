#include "rangesel/nn_estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rangesel/rng.hpp"

namespace rangesel {

void encode_query_into(const RangeQuery& q, std::vector<double>& out) {
    const std::size_t d = q.dims();
    out.resize(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        if (q.bounds[i]) {
            out[2 * i] = q.bounds[i]->lo;
            out[2 * i + 1] = q.bounds[i]->hi;
        } else {
            out[2 * i] = 0.0;
            out[2 * i + 1] = 1.0;
        }
    }
}

std::vector<double> encode_query(const RangeQuery& q) {
    std::vector<double> out;
    encode_query_into(q, out);
    return out;
}

void encode_onesided_into(std::span<const double> vertex, std::vector<double>& out) {
    out.resize(2 * vertex.size());
    for (std::size_t i = 0; i < vertex.size(); ++i) {
        out[2 * i] = 0.0;
        out[2 * i + 1] = vertex[i];
    }
}

DirectNnEstimator::DirectNnEstimator(MlpModel m, bool log_space, std::string kind_tag)
    : model_(std::move(m)), log_space_(log_space), kind_tag_(std::move(kind_tag)) {}

double DirectNnEstimator::estimate(const RangeQuery& q) const {
    if (2 * q.dims() != model_.input_dim())
        throw std::invalid_argument("query dimensionality does not match the model");
    thread_local std::vector<double> x;
    encode_query_into(q, x);
    const double out = model_.forward(x);
    count_calls(1);
    return log_space_ ? std::exp(out) : out;
}

CdfNnEstimator::CdfNnEstimator(MlpModel m) : model_(std::move(m)) {
    if (model_.input_dim() == 0)
        throw std::invalid_argument("cdf model needs at least one input column");
}

double CdfNnEstimator::cdf_at(std::span<const double> coords) const {
    if (coords.size() != model_.input_dim())
        throw std::invalid_argument("point dimensionality does not match the model");
    count_calls(1);
    return model_.forward(coords);
}

double CdfNnEstimator::estimate(const RangeQuery& q) const {
    const CdfVertexExpansion e = expand_query(q, model_.input_dim());
    count_calls(e.terms.size());
    double acc = 0.0;
    for (const auto& term : e.terms)
        acc += static_cast<double>(term.sign) * model_.forward(term.coords);
    return acc;
}

namespace {

std::vector<TrainSample> build_direct_samples(std::size_t dims, const Workload& train) {
    std::vector<TrainSample> samples;
    samples.reserve(train.size());
    for (const auto& item : train.items) {
        if (item.query.dims() != dims)
            throw std::invalid_argument("workload query dimensionality mismatch");
        samples.push_back(TrainSample{encode_query(item.query), item.selectivity});
    }
    return samples;
}

NnTrainResult internal_train_direct(std::size_t dims, const Workload& train,
                                    const TrainConfig& cfg, std::string kind_tag) {
    const OutputActivation head =
        cfg.loss == LossKind::Mse ? OutputActivation::Sigmoid : OutputActivation::Identity;
    MlpModel model(2 * dims, cfg.hidden, head, cfg.seed);
    const std::vector<TrainSample> samples = build_direct_samples(dims, train);

    NnTrainResult r;
    r.trace = rangesel::train(model, samples, cfg);
    r.estimator = std::make_unique<DirectNnEstimator>(
        std::move(model), head == OutputActivation::Identity, std::move(kind_tag));
    return r;
}

std::uint64_t workload_key(const Workload& w, std::size_t dims) {
    std::uint64_t h = 1469598103934665603ULL;
    auto fold = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ULL;
    };
    fold(dims);
    fold(w.size());
    for (const auto& item : w.items) {
        for (const auto& b : item.query.bounds) {
            if (b) {
                fold(std::bit_cast<std::uint64_t>(b->lo));
                fold(std::bit_cast<std::uint64_t>(b->hi));
            } else {
                fold(0x5a5a5a5a5a5a5a5aULL);
            }
        }
    }
    return h;
}

}  // namespace

const std::vector<CdfVertexExpansion>& ExpansionCache::get(const Workload& w, std::size_t dims) {
    const std::uint64_t key = workload_key(w, dims);
    if (filled_ && key_ == key && dims_ == dims) return cache_;
    cache_.clear();
    cache_.reserve(w.size());
    for (const auto& item : w.items) cache_.push_back(expand_query(item.query, dims));
    computed_ += w.size();
    key_ = key;
    dims_ = dims;
    filled_ = true;
    return cache_;
}

NnTrainResult train_direct(std::size_t dims, const Workload& train, const TrainConfig& cfg) {
    return internal_train_direct(dims, train, cfg, "direct");
}

NnTrainResult train_cdf_model(std::size_t dims, const Workload& train, const TrainConfig& cfg,
                              bool precompute_expansions, ExpansionCache* cache) {
    if (cfg.loss != LossKind::Mse)
        throw std::invalid_argument(
            "cdf model training accepts mse only; the signed vertex sum can be negative, so "
            "logarithmic losses are undefined");
    if (train.size() == 0) throw std::invalid_argument("training needs at least one sample");

    // Identity head: a sigmoid would have to saturate to reach F = 1 at the
    // upper domain corner, which stalls the fit exactly where range queries
    // anchor the CDF.
    MlpModel model(dims, cfg.hidden, OutputActivation::Identity, cfg.seed);

    NnTrainResult r;
    const std::vector<CdfVertexExpansion>* table = nullptr;
    std::vector<CdfVertexExpansion> local;
    if (cache) {
        const std::size_t before = cache->computed();
        table = &cache->get(train, dims);
        r.expansions_computed = cache->computed() - before;
    } else if (precompute_expansions) {
        local.reserve(train.size());
        for (const auto& item : train.items) local.push_back(expand_query(item.query, dims));
        r.expansions_computed = train.size();
        table = &local;
    }

    std::vector<double> labels(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) labels[i] = train.items[i].selectivity;

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    MlpWorkspace ws;
    Gradients g;
    g.resize_for(model);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

    CdfVertexExpansion scratch_exp;
    auto exp_for = [&](std::size_t i) -> const CdfVertexExpansion& {
        if (table) return (*table)[i];
        scratch_exp = expand_query(train.items[i].query, dims);
        ++r.expansions_computed;
        return scratch_exp;
    };

    r.trace.epoch_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        double epoch_acc = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            g.zero();
            double batch_acc = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const CdfVertexExpansion& e = exp_for(i);
                double shat = 0.0;
                for (const auto& term : e.terms)
                    shat += static_cast<double>(term.sign) * model.forward(term.coords, ws);
                const double err = shat - labels[i];
                batch_acc += err * err;
                const double dl = 2.0 * err;
                for (const auto& term : e.terms) {
                    model.forward(term.coords, ws);
                    model.backward(ws, dl * static_cast<double>(term.sign), g);
                }
            }
            if (!std::isfinite(batch_acc))
                throw TrainingDiverged(epoch,
                                       "training loss diverged at epoch " + std::to_string(epoch));
            g.scale(1.0 / static_cast<double>(end - start));
            opt.step(model, g);
            epoch_acc += batch_acc;
        }
        r.trace.epoch_loss.push_back(epoch_acc / static_cast<double>(order.size()));
    }

    r.estimator = std::make_unique<CdfNnEstimator>(std::move(model));
    return r;
}

NnTrainResult train_selfconsistent(std::size_t dims, const Workload& train, const TrainConfig& cfg,
                                   const SelfConsistencyConfig& sc, ExpansionCache* cache) {
    if (sc.omega1 == 0.0 && sc.omega2 == 0.0)
        return internal_train_direct(dims, train, cfg, "selfcon");
    if (train.size() == 0) throw std::invalid_argument("training needs at least one sample");
    if (sc.omega1 < 0.0 || sc.omega2 < 0.0)
        throw std::invalid_argument("consistency weights must be nonnegative");
    if (sc.omega2 > 0.0 && sc.consistency_sampler.dims != dims)
        throw std::invalid_argument("consistency sampler dims do not match the model");
    if (sc.omega2 > 0.0 && sc.consistency_batch == 0)
        throw std::invalid_argument("consistency batch must be positive");

    const OutputActivation head =
        cfg.loss == LossKind::Mse ? OutputActivation::Sigmoid : OutputActivation::Identity;
    const bool log_space = head == OutputActivation::Identity;
    MlpModel model(2 * dims, cfg.hidden, head, cfg.seed);
    const std::vector<TrainSample> samples = build_direct_samples(dims, train);

    NnTrainResult r;
    const std::vector<CdfVertexExpansion>* table = nullptr;
    std::vector<CdfVertexExpansion> local;
    if (sc.omega1 > 0.0) {
        if (cache) {
            const std::size_t before = cache->computed();
            table = &cache->get(train, dims);
            r.expansions_computed = cache->computed() - before;
        } else {
            local.reserve(train.size());
            for (const auto& item : train.items) local.push_back(expand_query(item.query, dims));
            r.expansions_computed = train.size();
            table = &local;
        }
    }

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Rng con_rng(derive_seed(cfg.seed, "consistency"));
    Optimizer opt(cfg.optimizer, cfg.learning_rate);
    MlpWorkspace ws;
    Gradients g;
    g.resize_for(model);
    std::vector<double> x;

    // selectivity-space output and its derivative wrt the activated output
    auto to_sel = [log_space](double out) { return log_space ? std::exp(out) : out; };

    auto cdf_path_forward = [&](const CdfVertexExpansion& e) {
        double acc = 0.0;
        for (const auto& term : e.terms) {
            encode_onesided_into(term.coords, x);
            acc += static_cast<double>(term.sign) * to_sel(model.forward(x, ws));
        }
        return acc;
    };
    // coef is dLoss/d(selectivity-space aggregate)
    auto cdf_path_backward = [&](const CdfVertexExpansion& e, double coef) {
        for (const auto& term : e.terms) {
            encode_onesided_into(term.coords, x);
            const double out = model.forward(x, ws);
            const double dsel = log_space ? std::exp(out) : 1.0;
            model.backward(ws, coef * static_cast<double>(term.sign) * dsel, g);
        }
    };

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);

    std::vector<double> path_err(batch);
    std::vector<RangeQuery> con_queries(sc.consistency_batch);
    std::vector<CdfVertexExpansion> con_exps(sc.consistency_batch);
    std::vector<double> con_diff(sc.consistency_batch);

    r.trace.epoch_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        double epoch_acc = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const double n = static_cast<double>(end - start);
            g.zero();

            double batch_acc = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const TrainSample& s = samples[order[k]];
                const double out = model.forward(s.x, ws);
                const LossGrad lg =
                    train_loss_grad(model.output_activation(), cfg.loss, out, s.y, cfg.clip_floor);
                model.backward(ws, lg.dloss_doutput, g);
                batch_acc += lg.loss;
            }
            double extra = 0.0;

            if (sc.omega1 > 0.0) {
                double sq = 0.0;
                for (std::size_t k = start; k < end; ++k) {
                    const std::size_t i = order[k];
                    path_err[k - start] = cdf_path_forward((*table)[i]) - samples[i].y;
                    sq += path_err[k - start] * path_err[k - start];
                }
                const double rmse = std::sqrt(sq / n);
                extra += sc.omega1 * rmse;
                if (rmse > 0.0) {
                    // pre-scaled by n so the global 1/n leaves err/(n*rmse)
                    for (std::size_t k = start; k < end; ++k)
                        cdf_path_backward((*table)[order[k]],
                                          sc.omega1 * path_err[k - start] / rmse);
                }
            }

            if (sc.omega2 > 0.0) {
                const double m = static_cast<double>(sc.consistency_batch);
                double acc = 0.0;
                for (std::size_t j = 0; j < sc.consistency_batch; ++j) {
                    con_queries[j] = sample_query(con_rng, sc.consistency_sampler);
                    con_exps[j] = expand_query(con_queries[j], dims);
                    encode_query_into(con_queries[j], x);
                    const double a = to_sel(model.forward(x, ws));
                    const double b = cdf_path_forward(con_exps[j]);
                    con_diff[j] = a - b;
                    acc += con_diff[j] * con_diff[j];
                }
                extra += sc.omega2 * (acc / m);
                for (std::size_t j = 0; j < sc.consistency_batch; ++j) {
                    const double coef = sc.omega2 * 2.0 * con_diff[j] * n / m;
                    encode_query_into(con_queries[j], x);
                    const double out = model.forward(x, ws);
                    const double dsel = log_space ? std::exp(out) : 1.0;
                    model.backward(ws, coef * dsel, g);
                    cdf_path_backward(con_exps[j], -coef);
                }
            }

            if (!std::isfinite(batch_acc) || !std::isfinite(extra))
                throw TrainingDiverged(epoch,
                                       "training loss diverged at epoch " + std::to_string(epoch));
            g.scale(1.0 / n);
            opt.step(model, g);
            epoch_acc += batch_acc + n * extra;
        }
        r.trace.epoch_loss.push_back(epoch_acc / static_cast<double>(order.size()));
    }

    r.estimator = std::make_unique<DirectNnEstimator>(std::move(model), log_space, "selfcon");
    return r;
}

}  // namespace rangesel
