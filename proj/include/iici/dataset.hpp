#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "iici/rng.hpp"
#include "iici/types.hpp"

namespace iici {

// One labeled observation: raw vector x, identity y, camera c, environment u
// (-1 until an epoch split assigns one), and the latent style cluster the
// generator drew it from (diagnostics only, never used by training).
template <class S>
struct Sample {
    VectorX<S> x;
    int y = 0;
    int c = 0;
    int u = -1;
    int style_truth = 0;
};

template <class S>
struct Dataset {
    std::vector<Sample<S>> samples;
    int num_ids = 0;      // Y
    int num_cameras = 0;  // C

    Index size() const { return static_cast<Index>(samples.size()); }
    Index dim() const { return samples.empty() ? 0 : samples.front().x.size(); }
};

template <class S>
struct SynthConfig {
    int num_ids = 60;
    int num_cameras = 4;
    int images_per_id = 8;  // per (identity, camera) pair
    int d_raw = 48;
    S id_signal_scale = S(1);
    S camera_bias_scale = S(2.5);  // additive per-(camera, style) offset magnitude
    S camera_gain_jitter = S(0.1);
    int styles_per_camera = 2;
    S noise_scale = S(0.15);
    std::uint64_t seed = 1;
};

template <class S>
void validate(const SynthConfig<S>& cfg) {
    if (cfg.num_ids < 1) throw std::invalid_argument("SynthConfig: num_ids must be >= 1");
    if (cfg.num_cameras < 1) throw std::invalid_argument("SynthConfig: num_cameras must be >= 1");
    if (cfg.images_per_id < 1) throw std::invalid_argument("SynthConfig: images_per_id must be >= 1");
    if (cfg.d_raw < 1) throw std::invalid_argument("SynthConfig: d_raw must be >= 1");
    if (cfg.styles_per_camera < 1) throw std::invalid_argument("SynthConfig: styles_per_camera must be >= 1");
    if (cfg.id_signal_scale < S(0) || cfg.camera_bias_scale < S(0) ||
        cfg.camera_gain_jitter < S(0) || cfg.noise_scale < S(0))
        throw std::invalid_argument("SynthConfig: scales must be >= 0");
}

template <class S>
void check_labels(const Dataset<S>& ds) {
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        if (s.y < 0 || s.y >= ds.num_ids)
            throw LabelRangeError("sample " + std::to_string(i) + ": identity " +
                                  std::to_string(s.y) + " outside [0, " +
                                  std::to_string(ds.num_ids) + ")");
        if (s.c < 0 || s.c >= ds.num_cameras)
            throw LabelRangeError("sample " + std::to_string(i) + ": camera " +
                                  std::to_string(s.c) + " outside [0, " +
                                  std::to_string(ds.num_cameras) + ")");
        if (!s.x.allFinite())
            throw DataError("sample " + std::to_string(i) + ": non-finite observation");
    }
}

// x = gain_c (*) (id_vector_y + style_offset_{c,s} + noise), sample order
// identity-major then camera then image. Each identity appears under every
// camera; the per-(identity, camera) style cluster is drawn once and recorded
// in style_truth. Pure function of the config.
template <class S>
Dataset<S> generate_synthetic(const SynthConfig<S>& cfg) {
    validate(cfg);
    Rng rng = substream(cfg.seed, "data");

    const int Y = cfg.num_ids, C = cfg.num_cameras, D = cfg.d_raw;
    const int SPC = cfg.styles_per_camera;

    auto draw = [&](S scale) {
        VectorX<S> v(D);
        for (int j = 0; j < D; ++j) v[j] = scale * S(rng.normal());
        return v;
    };

    std::vector<VectorX<S>> id_vec(Y);
    for (int y = 0; y < Y; ++y) id_vec[y] = draw(cfg.id_signal_scale);

    std::vector<VectorX<S>> gain(C);
    for (int c = 0; c < C; ++c)
        gain[c] = VectorX<S>::Ones(D) + draw(cfg.camera_gain_jitter);

    std::vector<VectorX<S>> offset(static_cast<std::size_t>(C) * SPC);
    for (int c = 0; c < C; ++c)
        for (int s = 0; s < SPC; ++s)
            offset[static_cast<std::size_t>(c) * SPC + s] = draw(cfg.camera_bias_scale);

    std::vector<int> style(static_cast<std::size_t>(Y) * C);
    for (int y = 0; y < Y; ++y)
        for (int c = 0; c < C; ++c)
            style[static_cast<std::size_t>(y) * C + c] = int(rng.below(SPC));

    Dataset<S> ds;
    ds.num_ids = Y;
    ds.num_cameras = C;
    ds.samples.reserve(static_cast<std::size_t>(Y) * C * cfg.images_per_id);
    for (int y = 0; y < Y; ++y) {
        for (int c = 0; c < C; ++c) {
            const int s = style[static_cast<std::size_t>(y) * C + c];
            const VectorX<S>& off = offset[static_cast<std::size_t>(c) * SPC + s];
            for (int k = 0; k < cfg.images_per_id; ++k) {
                Sample<S> smp;
                smp.x = gain[c].cwiseProduct(id_vec[y] + off + draw(cfg.noise_scale));
                smp.y = y;
                smp.c = c;
                smp.style_truth = s;
                ds.samples.push_back(std::move(smp));
            }
        }
    }
    return ds;
}

// Cameras in which each identity has at least one image, ascending.
template <class S>
std::vector<std::vector<int>> cameras_per_id(const Dataset<S>& ds) {
    std::vector<std::vector<int>> cams(ds.num_ids);
    for (const auto& s : ds.samples) {
        auto& v = cams[s.y];
        if (std::find(v.begin(), v.end(), s.c) == v.end()) v.push_back(s.c);
    }
    for (auto& v : cams) std::sort(v.begin(), v.end());
    return cams;
}

// True when every identity's images come from a single camera.
template <class S>
bool is_single_camera_per_id(const Dataset<S>& ds) {
    const auto cams = cameras_per_id(ds);
    return std::all_of(cams.begin(), cams.end(),
                       [](const auto& v) { return v.size() <= 1; });
}

// Unique identities seen under camera c, ascending.
template <class S>
std::vector<int> ids_of_camera(const Dataset<S>& ds, int c) {
    std::vector<char> seen(ds.num_ids, 0);
    for (const auto& s : ds.samples)
        if (s.c == c) seen[s.y] = 1;
    std::vector<int> ids;
    for (int y = 0; y < ds.num_ids; ++y)
        if (seen[y]) ids.push_back(y);
    return ids;
}

// Camera of each identity; requires the single-camera property.
template <class S>
std::vector<int> camera_of_id(const Dataset<S>& ds) {
    std::vector<int> cam(ds.num_ids, -1);
    for (const auto& s : ds.samples) {
        if (cam[s.y] != -1 && cam[s.y] != s.c)
            throw std::invalid_argument("camera_of_id: identity " + std::to_string(s.y) +
                                        " spans multiple cameras");
        cam[s.y] = s.c;
    }
    return cam;
}

// Keep, for every identity, all images of one uniformly chosen camera among
// those it appears in. Identities already confined to one camera pass through.
template <class S>
Dataset<S> make_sct_split(const Dataset<S>& ds, std::uint64_t seed) {
    Rng rng = substream(seed, "sct");
    const auto cams = cameras_per_id(ds);

    std::vector<int> keep(ds.num_ids, -1);
    for (int y = 0; y < ds.num_ids; ++y) {
        if (cams[y].empty()) continue;
        keep[y] = cams[y][std::size_t(rng.below(std::int64_t(cams[y].size())))];
    }

    Dataset<S> out;
    out.num_ids = ds.num_ids;
    out.num_cameras = ds.num_cameras;
    for (const auto& s : ds.samples)
        if (s.c == keep[s.y]) out.samples.push_back(s);
    return out;
}

// Append, for floor(ratio * Y) randomly chosen identities, their images from
// one extra camera of `full`, relabeled with fresh identity labels. Y grows by
// the number of injected (identity, camera) pairs.
template <class S>
Dataset<S> inject_overlap(const Dataset<S>& sct, const Dataset<S>& full, double ratio,
                          std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0)
        throw std::invalid_argument("inject_overlap: ratio must lie in [0, 1]");
    Rng rng = substream(seed, "overlap");

    Dataset<S> out = sct;
    const int k = int(ratio * sct.num_ids);
    if (k == 0) return out;

    std::vector<int> ids(sct.num_ids);
    for (int y = 0; y < sct.num_ids; ++y) ids[y] = y;
    for (int i = 0; i < k; ++i) {
        const auto j = i + rng.below(std::int64_t(ids.size()) - i);
        std::swap(ids[i], ids[j]);
    }
    std::vector<int> chosen(ids.begin(), ids.begin() + k);
    std::sort(chosen.begin(), chosen.end());

    const auto sct_cam = camera_of_id(sct);
    const auto full_cams = cameras_per_id(full);

    int next_label = sct.num_ids;
    for (const int y : chosen) {
        std::vector<int> others;
        for (const int c : full_cams[y])
            if (c != sct_cam[y]) others.push_back(c);
        if (others.empty()) continue;
        const int extra = others[std::size_t(rng.below(std::int64_t(others.size())))];
        for (const auto& s : full.samples) {
            if (s.y != y || s.c != extra) continue;
            Sample<S> copy = s;
            copy.y = next_label;
            copy.u = -1;
            out.samples.push_back(std::move(copy));
        }
        ++next_label;
    }
    out.num_ids = next_label;
    return out;
}

}  // namespace iici
