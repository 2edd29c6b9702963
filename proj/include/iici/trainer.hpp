#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "iici/dataset.hpp"
#include "iici/encoder.hpp"
#include "iici/envsplit.hpp"
#include "iici/losses.hpp"
#include "iici/memory.hpp"
#include "iici/rng.hpp"
#include "iici/types.hpp"

namespace iici {

// Which loss terms a run optimizes. The named ablation variants map onto
// these flags; strong_to_memory routes strong-view features into the
// prototype bank (only the strong-input variant does this).
struct LossSelector {
    bool base = false;
    bool intra1 = false;
    bool intra2 = false;
    bool inter1 = false;
    bool inter2 = false;
    bool strong_to_memory = false;
    int k1_override = 0;  // > 0 replaces LossConfig::k1
};

inline LossSelector ablation_variant(const std::string& name) {
    LossSelector s;
    if (name == "A1") {
        s.base = true;
    } else if (name == "A2") {
        s.intra1 = true;
    } else if (name == "A3") {
        s.intra2 = true;
        s.strong_to_memory = true;
    } else if (name == "A4") {
        s.intra1 = s.intra2 = true;
    } else if (name == "A5") {
        s.inter1 = true;
        s.k1_override = 1;
    } else if (name == "A6") {
        s.inter1 = true;
    } else if (name == "A7") {
        s.intra1 = s.inter1 = true;
    } else if (name == "A8") {
        s.intra1 = s.inter1 = s.inter2 = true;
    } else if (name == "A9") {
        s.intra1 = s.intra2 = s.inter1 = s.inter2 = true;
    } else {
        throw std::invalid_argument("unknown ablation variant '" + name + "'");
    }
    return s;
}

enum class Optimizer { adam, sgd };

template <class S>
struct TrainConfig {
    int p = 16;  // identities per batch
    int k = 4;   // images per identity
    int epochs = 30;
    S lr = S(0.00035);
    int lr_decay_every = 20;
    S lr_decay_factor = S(0.1);
    Optimizer opt = Optimizer::adam;
    S beta1 = S(0.9), beta2 = S(0.999), adam_eps = S(1e-8);
    S mu = S(0.2);
    int hidden = 64;
    int embed_dim = 32;
    LossConfig<S> loss;
    AugmentConfig<S> aug;
    EnvSplitConfig<S> env;
    LossSelector sel = ablation_variant("A9");
    std::string variant_name = "A9";
    std::uint64_t seed = 1;
};

template <class S>
void validate(const TrainConfig<S>& cfg) {
    if (cfg.p < 1 || cfg.k < 1) throw std::invalid_argument("TrainConfig: p, k must be >= 1");
    if (cfg.epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (cfg.lr < S(0)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
    if (cfg.lr_decay_every < 1) throw std::invalid_argument("TrainConfig: lr_decay_every must be >= 1");
    if (!(cfg.lr_decay_factor > S(0))) throw std::invalid_argument("TrainConfig: lr_decay_factor must be > 0");
    if (!(cfg.mu >= S(0) && cfg.mu <= S(1))) throw std::invalid_argument("TrainConfig: mu must lie in [0, 1]");
    if (cfg.hidden < 1 || cfg.embed_dim < 1) throw std::invalid_argument("TrainConfig: encoder dims must be >= 1");
    validate(cfg.loss);
}

template <class S>
struct AdamState {
    ParamGrads<S> m, v;
    std::uint64_t t = 0;
};

struct StepRecord {
    int epoch = 0;
    int step = 0;
    double total = 0, base = 0, intra1 = 0, intra2 = 0, inter1 = 0, inter2 = 0;
    double lr = 0;
};

struct EpochRecord {
    int epoch = 0;
    double mean_total = 0;
    double lr = 0;
    int num_envs = 0;
};

struct TrainTrace {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
};

template <class S>
struct TrainState {
    EncoderParams<S> params;
    AdamState<S> opt;
    PrototypeBank<S> bank;
    EnvironmentAssignment env;
    int epoch = 0;
    Rng sampler{0};
    Rng augment{0};
    TrainTrace trace;
};

// P distinct identities without replacement (every identity when fewer than P
// exist), K images each; images repeat only when an identity has fewer than K.
inline std::vector<Index> pk_sample(const std::vector<std::vector<Index>>& images_of_id,
                                    int p, int k, Rng& rng) {
    std::vector<int> ids;
    for (std::size_t y = 0; y < images_of_id.size(); ++y)
        if (!images_of_id[y].empty()) ids.push_back(int(y));
    if (ids.empty()) throw std::invalid_argument("pk_sample: empty dataset");

    const int m = std::min<int>(p, int(ids.size()));
    for (int i = 0; i < m; ++i) {
        const auto j = i + rng.below(std::int64_t(ids.size()) - i);
        std::swap(ids[std::size_t(i)], ids[std::size_t(j)]);
    }

    std::vector<Index> batch;
    batch.reserve(std::size_t(m) * k);
    for (int i = 0; i < m; ++i) {
        const auto& imgs = images_of_id[std::size_t(ids[std::size_t(i)])];
        const int n = int(imgs.size());
        if (n >= k) {
            std::vector<Index> pool = imgs;
            for (int a = 0; a < k; ++a) {
                const auto j = a + rng.below(std::int64_t(n) - a);
                std::swap(pool[std::size_t(a)], pool[std::size_t(j)]);
                batch.push_back(pool[std::size_t(a)]);
            }
        } else {
            for (int a = 0; a < k; ++a)
                batch.push_back(imgs[std::size_t(rng.below(n))]);
        }
    }
    return batch;
}

template <class S>
std::vector<std::vector<Index>> images_per_id(const Dataset<S>& ds) {
    std::vector<std::vector<Index>> out(std::size_t(ds.num_ids));
    for (Index i = 0; i < ds.size(); ++i)
        out[std::size_t(ds.samples[std::size_t(i)].y)].push_back(i);
    return out;
}

namespace detail {

template <class S>
void apply_update(Optimizer opt, S lr, S beta1, S beta2, S eps, std::uint64_t t,
                  MatrixX<S>& param, MatrixX<S>& m, MatrixX<S>& v, const MatrixX<S>& g) {
    if (opt == Optimizer::sgd) {
        param -= lr * g;
        return;
    }
    m = beta1 * m + (S(1) - beta1) * g;
    v = beta2 * v + (S(1) - beta2) * g.cwiseProduct(g);
    const S bc1 = S(1) - std::pow(beta1, S(t));
    const S bc2 = S(1) - std::pow(beta2, S(t));
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

template <class S>
void apply_update(Optimizer opt, S lr, S beta1, S beta2, S eps, std::uint64_t t,
                  VectorX<S>& param, VectorX<S>& m, VectorX<S>& v, const VectorX<S>& g) {
    if (opt == Optimizer::sgd) {
        param -= lr * g;
        return;
    }
    m = beta1 * m + (S(1) - beta1) * g;
    v = beta2 * v + (S(1) - beta2) * g.cwiseProduct(g);
    const S bc1 = S(1) - std::pow(beta1, S(t));
    const S bc2 = S(1) - std::pow(beta2, S(t));
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace detail

template <class S>
S lr_at_epoch(const TrainConfig<S>& cfg, int epoch) {
    return cfg.lr * std::pow(cfg.lr_decay_factor, S(epoch / cfg.lr_decay_every));
}

// One optimization step: encode both views, combine the selected losses,
// backpropagate, apply the optimizer, then refresh the touched prototypes
// from this batch's features (weak view unless the selector says otherwise).
template <class S>
StepRecord train_step(TrainState<S>& state, const Dataset<S>& ds,
                      const std::vector<Index>& batch_idx, const TrainConfig<S>& cfg,
                      const std::vector<int>& cam_of_id, const std::vector<int>& scope_of_id,
                      S lr) {
    const Index b = Index(batch_idx.size());
    const Index d = cfg.embed_dim;

    std::vector<VectorX<S>> xw(std::size_t(b)), xs(std::size_t(b));
    BatchView<S> batch;
    batch.weak.resize(b, d);
    batch.strong.resize(b, d);
    batch.labels.resize(b);
    batch.cameras.resize(b);
    batch.envs.resize(b);
    for (Index i = 0; i < b; ++i) {
        const auto& smp = ds.samples[std::size_t(batch_idx[std::size_t(i)])];
        xw[std::size_t(i)] = augment_weak(smp.x, state.augment, cfg.aug);
        xs[std::size_t(i)] = augment_strong(smp.x, state.augment, cfg.aug);
        batch.weak.row(i) = encode(state.params, xw[std::size_t(i)]).embedding.transpose();
        batch.strong.row(i) = encode(state.params, xs[std::size_t(i)]).embedding.transpose();
        batch.labels[i] = smp.y;
        batch.cameras[i] = smp.c;
        batch.envs[i] = scope_of_id[std::size_t(smp.y)];
    }

    LossConfig<S> lcfg = cfg.loss;
    if (cfg.sel.k1_override > 0) lcfg.k1 = cfg.sel.k1_override;

    StepRecord rec;
    MatrixX<S> gw = MatrixX<S>::Zero(b, d);
    MatrixX<S> gs = MatrixX<S>::Zero(b, d);
    auto take = [&](const LossOut<S>& lo, double& slot) {
        slot = double(lo.value);
        rec.total += double(lo.value);
        gw += lo.grad_weak;
        gs += lo.grad_strong;
    };
    if (cfg.sel.base) take(loss_base(batch, state.bank, lcfg), rec.base);
    if (cfg.sel.intra1) take(loss_intra_env(batch, state.bank, lcfg, scope_of_id), rec.intra1);
    if (cfg.sel.intra2) take(loss_intra_aug(batch, state.bank, lcfg, scope_of_id), rec.intra2);
    if (cfg.sel.inter1) take(loss_inter1(batch, lcfg), rec.inter1);
    if (cfg.sel.inter2) take(loss_inter2(batch, state.bank, lcfg, cam_of_id), rec.inter2);
    rec.lr = double(lr);

    if (!std::isfinite(rec.total))
        throw NumericError("train_step: non-finite loss at epoch " + std::to_string(state.epoch));

    // accumulate parameter gradients, weak rows first then strong rows
    auto grads = ParamGrads<S>::zeros_like(state.params);
    for (Index i = 0; i < b; ++i)
        if (!gw.row(i).isZero(S(0)))
            grads += backward(state.params, xw[std::size_t(i)], VectorX<S>(gw.row(i).transpose()));
    for (Index i = 0; i < b; ++i)
        if (!gs.row(i).isZero(S(0)))
            grads += backward(state.params, xs[std::size_t(i)], VectorX<S>(gs.row(i).transpose()));

    state.opt.t += 1;
    detail::apply_update(cfg.opt, lr, cfg.beta1, cfg.beta2, cfg.adam_eps, state.opt.t,
                         state.params.w1, state.opt.m.w1, state.opt.v.w1, grads.w1);
    detail::apply_update(cfg.opt, lr, cfg.beta1, cfg.beta2, cfg.adam_eps, state.opt.t,
                         state.params.b1, state.opt.m.b1, state.opt.v.b1, grads.b1);
    detail::apply_update(cfg.opt, lr, cfg.beta1, cfg.beta2, cfg.adam_eps, state.opt.t,
                         state.params.w2, state.opt.m.w2, state.opt.v.w2, grads.w2);
    detail::apply_update(cfg.opt, lr, cfg.beta1, cfg.beta2, cfg.adam_eps, state.opt.t,
                         state.params.b2, state.opt.m.b2, state.opt.v.b2, grads.b2);

    // prototype refresh, one update per image in batch order
    const MatrixX<S>& src = cfg.sel.strong_to_memory ? batch.strong : batch.weak;
    for (Index i = 0; i < b; ++i)
        update(state.bank, batch.labels[i], VectorX<S>(src.row(i).transpose()));

    return rec;
}

template <class S>
TrainState<S> init_train_state(const Dataset<S>& ds, const TrainConfig<S>& cfg) {
    TrainState<S> state;
    Rng init_rng = substream(cfg.seed, "init");
    state.params = init_encoder<S>(ds.dim(), cfg.hidden, cfg.embed_dim, init_rng);
    state.bank = init_from_dataset(ds, state.params, cfg.mu);
    state.opt.m = ParamGrads<S>::zeros_like(state.params);
    state.opt.v = ParamGrads<S>::zeros_like(state.params);
    state.sampler = substream(cfg.seed, "sampler");
    state.augment = substream(cfg.seed, "augment");
    return state;
}

// Full loop: per epoch, refresh environments (when enabled), run
// ceil(N / (P*K)) freshly sampled PK steps, and decay the learning rate on
// the configured schedule.
template <class S>
TrainState<S> train(const Dataset<S>& ds, const TrainConfig<S>& cfg) {
    validate(cfg);
    if (ds.samples.empty()) throw std::invalid_argument("train: empty dataset");

    TrainState<S> state = init_train_state(ds, cfg);
    const auto cam_map = camera_of_id(ds);
    const auto imgs = images_per_id(ds);
    const int steps_per_epoch =
        int((ds.size() + Index(cfg.p) * cfg.k - 1) / (Index(cfg.p) * cfg.k));

    EnvSplitConfig<S> env_cfg = cfg.env;
    env_cfg.seed = cfg.seed;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        state.epoch = epoch;
        if (cfg.env.enabled) {
            state.env = refresh(ds, state.params, epoch, env_cfg);
        } else {
            state.env.env_of_id = cam_map;
            state.env.num_envs = ds.num_cameras;
        }
        const S lr = lr_at_epoch(cfg, epoch);

        double epoch_total = 0;
        for (int s = 0; s < steps_per_epoch; ++s) {
            const auto batch = pk_sample(imgs, cfg.p, cfg.k, state.sampler);
            auto rec = train_step(state, ds, batch, cfg, cam_map, state.env.env_of_id, lr);
            rec.epoch = epoch;
            rec.step = s;
            epoch_total += rec.total;
            state.trace.steps.push_back(rec);
        }
        state.trace.epochs.push_back(
            {epoch, epoch_total / steps_per_epoch, double(lr), state.env.num_envs});
    }
    state.epoch = cfg.epochs;
    return state;
}

// ---- checkpoint: encoder params + bank + optimizer moments + rng state ----

namespace detail {

constexpr char kCheckpointMagic[8] = {'I', 'I', 'C', 'I', 'C', 'K', '0', '1'};

inline void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}
inline std::uint64_t get_u64(std::istream& is, const std::string& path) {
    std::uint64_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw TruncatedError(path + ": short read");
    return v;
}

template <class S>
void put_param_grads(std::ostream& os, const ParamGrads<S>& g) {
    put_f32_block<S>(os, g.w1);
    put_f32_block<S>(os, g.b1);
    put_f32_block<S>(os, g.w2);
    put_f32_block<S>(os, g.b2);
}

template <class S>
void get_param_grads(std::istream& is, ParamGrads<S>& g, const std::string& path) {
    get_f32_block(is, g.w1, path);
    get_f32_block(is, g.b1, path);
    get_f32_block(is, g.w2, path);
    get_f32_block(is, g.b2, path);
}

}  // namespace detail

struct CheckpointMeta {
    std::string variant = "A9";
    std::uint64_t seed = 0;
};

template <class S>
void save_checkpoint(const TrainState<S>& state, const CheckpointMeta& meta,
                     const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    detail::put_u32(os, std::uint32_t(state.params.input_dim()));
    detail::put_u32(os, std::uint32_t(state.params.hidden_dim()));
    detail::put_u32(os, std::uint32_t(state.params.embed_dim()));
    detail::put_u32(os, std::uint32_t(state.bank.num_classes()));

    char variant[4] = {0, 0, 0, 0};
    std::strncpy(variant, meta.variant.c_str(), 3);
    os.write(variant, 4);
    detail::put_u64(os, meta.seed);
    detail::put_u32(os, std::uint32_t(state.epoch));

    detail::put_f32_block<S>(os, state.params.w1);
    detail::put_f32_block<S>(os, state.params.b1);
    detail::put_f32_block<S>(os, state.params.w2);
    detail::put_f32_block<S>(os, state.params.b2);

    const float mu = float(state.bank.mu);
    os.write(reinterpret_cast<const char*>(&mu), 4);
    detail::put_f32_block<S>(os, state.bank.m);

    detail::put_u64(os, state.opt.t);
    detail::put_param_grads(os, state.opt.m);
    detail::put_param_grads(os, state.opt.v);

    detail::put_u64(os, state.sampler.state());
    detail::put_u64(os, state.augment.state());
    if (!os) throw DataError("write failed for " + path);
}

template <class S>
TrainState<S> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    char magic[sizeof(detail::kCheckpointMagic)];
    if (!is.read(magic, sizeof(magic))) throw HeaderError(path + ": empty or short file");
    if (std::memcmp(magic, detail::kCheckpointMagic, 6) != 0)
        throw HeaderError(path + ": not a checkpoint file");
    if (std::memcmp(magic + 6, detail::kCheckpointMagic + 6, 2) != 0)
        throw HeaderError(path + ": unsupported version");

    const Index dr = detail::get_u32(is, path);
    const Index h = detail::get_u32(is, path);
    const Index d = detail::get_u32(is, path);
    const Index y = detail::get_u32(is, path);

    char variant[5] = {0, 0, 0, 0, 0};
    if (!is.read(variant, 4)) throw TruncatedError(path + ": short read");
    const std::uint64_t seed = detail::get_u64(is, path);
    const int epoch = int(detail::get_u32(is, path));
    if (meta) {
        meta->variant = variant;
        meta->seed = seed;
    }

    TrainState<S> state;
    state.epoch = epoch;
    state.params.w1.resize(h, dr);
    state.params.b1.resize(h);
    state.params.w2.resize(d, h);
    state.params.b2.resize(d);
    detail::get_f32_block(is, state.params.w1, path);
    detail::get_f32_block(is, state.params.b1, path);
    detail::get_f32_block(is, state.params.w2, path);
    detail::get_f32_block(is, state.params.b2, path);

    float mu;
    if (!is.read(reinterpret_cast<char*>(&mu), 4)) throw TruncatedError(path + ": short read");
    state.bank.mu = S(mu);
    state.bank.m.resize(y, d);
    detail::get_f32_block(is, state.bank.m, path);

    state.opt.t = detail::get_u64(is, path);
    state.opt.m = ParamGrads<S>::zeros_like(state.params);
    state.opt.v = ParamGrads<S>::zeros_like(state.params);
    detail::get_param_grads(is, state.opt.m, path);
    detail::get_param_grads(is, state.opt.v, path);

    state.sampler.set_state(detail::get_u64(is, path));
    state.augment.set_state(detail::get_u64(is, path));
    return state;
}

}  // namespace iici
