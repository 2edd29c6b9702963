#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "iici/dataset.hpp"
#include "iici/encoder.hpp"
#include "iici/envsplit.hpp"
#include "iici/eval.hpp"
#include "iici/trainer.hpp"

namespace iici {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every experiment knob in one flat struct, parseable from a `key = value`
// text file. Defaults define the standard synthetic benchmark.
struct RunConfig {
    // data generation
    int num_ids = 60;
    int num_cameras = 4;
    int images_per_id = 8;
    int d_raw = 48;
    double id_signal_scale = 1.0;
    double camera_bias_scale = 2.5;
    double camera_gain_jitter = 0.1;
    int styles_per_camera = 2;
    double noise_scale = 0.15;
    int num_test_ids = 40;
    double overlap_ratio = 0.0;

    // training
    int p = 16;
    int k = 4;
    int epochs = 30;
    double lr = 0.00035;
    int lr_decay_every = 20;
    double lr_decay_factor = 0.1;
    std::string optimizer = "adam";
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double mu = 0.2;
    double tau = 0.05;
    double m1 = 0.1;
    double m2 = 0.1;
    int k1 = 10;
    int k2 = 20;
    int hidden = 64;
    int embed_dim = 32;
    bool env_split = true;
    int ids_per_env = 30;
    int max_splits = 4;
    int forced_splits = 0;
    std::string style_pooling = "pooled";

    // augmentation
    double weak_jitter = 0.05;
    double weak_mask_frac = 0.05;
    double strong_jitter = 0.1;
    double strong_mask_frac = 0.15;
    double strong_gain = 0.25;
    double strong_offset = 0.1;

    // evaluation
    std::string probe = "logistic";
    int probe_iters = 300;
    int order_trials = 50;

    // run identity
    std::string variant = "A9";
    std::uint64_t seed = 1;
    std::string run_id = "run";
};

// Parses `key = value` lines; '#' starts a comment, blank lines are ignored,
// unknown keys are errors. The IICI_SEED environment variable, when set,
// overrides the seed afterwards.
RunConfig parse_config_file(const std::string& path);

// Applies one `key = value` assignment to an existing config.
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

// IICI_SEED override; called by parse_config_file, exposed for default configs.
void apply_env_seed(RunConfig& cfg);

template <class S>
SynthConfig<S> synth_config(const RunConfig& r) {
    SynthConfig<S> c;
    c.num_ids = r.num_ids;
    c.num_cameras = r.num_cameras;
    c.images_per_id = r.images_per_id;
    c.d_raw = r.d_raw;
    c.id_signal_scale = S(r.id_signal_scale);
    c.camera_bias_scale = S(r.camera_bias_scale);
    c.camera_gain_jitter = S(r.camera_gain_jitter);
    c.styles_per_camera = r.styles_per_camera;
    c.noise_scale = S(r.noise_scale);
    c.seed = r.seed;
    return c;
}

template <class S>
TrainConfig<S> train_config(const RunConfig& r) {
    TrainConfig<S> c;
    c.p = r.p;
    c.k = r.k;
    c.epochs = r.epochs;
    c.lr = S(r.lr);
    c.lr_decay_every = r.lr_decay_every;
    c.lr_decay_factor = S(r.lr_decay_factor);
    if (r.optimizer == "adam")
        c.opt = Optimizer::adam;
    else if (r.optimizer == "sgd")
        c.opt = Optimizer::sgd;
    else
        throw ConfigError("optimizer must be 'adam' or 'sgd', got '" + r.optimizer + "'");
    c.beta1 = S(r.beta1);
    c.beta2 = S(r.beta2);
    c.adam_eps = S(r.adam_eps);
    c.mu = S(r.mu);
    c.hidden = r.hidden;
    c.embed_dim = r.embed_dim;
    c.loss.tau = S(r.tau);
    c.loss.m1 = S(r.m1);
    c.loss.m2 = S(r.m2);
    c.loss.k1 = r.k1;
    c.loss.k2 = r.k2;
    c.aug.weak_jitter = S(r.weak_jitter);
    c.aug.weak_mask_frac = S(r.weak_mask_frac);
    c.aug.strong_jitter = S(r.strong_jitter);
    c.aug.strong_mask_frac = S(r.strong_mask_frac);
    c.aug.strong_gain = S(r.strong_gain);
    c.aug.strong_offset = S(r.strong_offset);
    c.env.enabled = r.env_split;
    c.env.ids_per_env = r.ids_per_env;
    c.env.max_splits = r.max_splits;
    c.env.forced_splits = r.forced_splits;
    if (r.style_pooling == "pooled")
        c.env.pooling = StylePooling::pooled;
    else if (r.style_pooling == "per_unit")
        c.env.pooling = StylePooling::per_unit;
    else
        throw ConfigError("style_pooling must be 'pooled' or 'per_unit'");
    c.env.seed = r.seed;
    c.sel = ablation_variant(r.variant);
    c.variant_name = r.variant;
    c.seed = r.seed;
    return c;
}

inline ProbeKind probe_kind(const RunConfig& r) {
    if (r.probe == "logistic") return ProbeKind::logistic;
    if (r.probe == "nearest_mean") return ProbeKind::nearest_mean;
    throw ConfigError("probe must be 'logistic' or 'nearest_mean'");
}

}  // namespace iici
