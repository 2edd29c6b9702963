#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "iici/dataset.hpp"
#include "iici/encoder.hpp"
#include "iici/rng.hpp"
#include "iici/types.hpp"

namespace iici {

// Identity -> sub-camera environment map. Environments partition each
// camera's identity set, so the total count is at least the camera count.
struct EnvironmentAssignment {
    std::vector<int> env_of_id;
    int num_envs = 0;
};

template <class S>
struct EnvSplitConfig {
    bool enabled = true;
    int ids_per_env = 30;  // target identities per environment
    int max_splits = 4;    // per-camera cluster cap
    int forced_splits = 0; // > 0 pins the per-camera cluster count (sweeps)
    int max_iters = 100;
    StylePooling pooling = StylePooling::pooled;
    std::uint64_t seed = 1;
};

// Per-identity style vector: mean of the style descriptors of the identity's
// images under un-augmented encoding.
template <class S>
MatrixX<S> compute_id_style(const Dataset<S>& ds, const EncoderParams<S>& params,
                            StylePooling pooling = StylePooling::pooled) {
    std::vector<int> counts(ds.num_ids, 0);
    MatrixX<S> style;
    for (const auto& s : ds.samples) {
        const auto enc = encode(params, s.x, pooling);
        if (style.size() == 0) style = MatrixX<S>::Zero(ds.num_ids, enc.style.v.size());
        style.row(s.y) += enc.style.v.transpose();
        counts[s.y] += 1;
    }
    for (int y = 0; y < ds.num_ids; ++y) {
        if (counts[y] == 0)
            throw std::invalid_argument("compute_id_style: identity " + std::to_string(y) +
                                        " has no images");
        style.row(y) /= S(counts[y]);
    }
    return style;
}

// Lloyd's algorithm with k-means++ seeding. Runs to an assignment fixpoint or
// max_iters; an emptied cluster steals the farthest point from the largest
// cluster. Deterministic given the seed.
template <class S>
std::vector<int> kmeans(const MatrixX<S>& points, int k, std::uint64_t seed,
                        int max_iters = 100) {
    const Index n = points.rows(), d = points.cols();
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (n == 0) throw std::invalid_argument("kmeans: no points");
    if (Index(k) > n) throw std::invalid_argument("kmeans: k exceeds point count");

    Rng rng = substream(seed, "kmeans");
    MatrixX<S> centers(k, d);

    // k-means++ seeding
    std::vector<S> d2(std::size_t(n), std::numeric_limits<S>::max());
    Index first = Index(rng.below(n));
    centers.row(0) = points.row(first);
    for (int c = 1; c < k; ++c) {
        S total = S(0);
        for (Index i = 0; i < n; ++i) {
            const S dist2 = (points.row(i) - centers.row(c - 1)).squaredNorm();
            d2[std::size_t(i)] = std::min(d2[std::size_t(i)], dist2);
            total += d2[std::size_t(i)];
        }
        Index pick = -1;
        if (total > S(0)) {
            const S target = S(rng.uniform()) * total;
            S acc = S(0);
            for (Index i = 0; i < n && pick < 0; ++i) {
                acc += d2[std::size_t(i)];
                if (acc >= target) pick = i;
            }
            if (pick < 0) pick = n - 1;
        } else {
            pick = Index(rng.below(n));  // all points coincide with chosen centers
        }
        centers.row(c) = points.row(pick);
    }

    std::vector<int> assign(std::size_t(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            S best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const S dist2 = (points.row(i) - centers.row(c)).squaredNorm();
                if (dist2 < best_d) {
                    best_d = dist2;
                    best = c;
                }
            }
            if (assign[std::size_t(i)] != best) {
                assign[std::size_t(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;

        // rebuild centers as sums, repair empties, then divide
        centers.setZero();
        std::vector<int> counts(std::size_t(k), 0);
        for (Index i = 0; i < n; ++i) {
            centers.row(assign[std::size_t(i)]) += points.row(i);
            counts[std::size_t(assign[std::size_t(i)])] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[std::size_t(c)] > 0) continue;
            const int big =
                int(std::max_element(counts.begin(), counts.end()) - counts.begin());
            if (counts[std::size_t(big)] <= 1) continue;
            const VectorX<S> big_mean =
                centers.row(big).transpose() / S(counts[std::size_t(big)]);
            Index far = -1;
            S far_d = S(-1);
            for (Index i = 0; i < n; ++i) {
                if (assign[std::size_t(i)] != big) continue;
                const S dist2 = (points.row(i) - big_mean.transpose()).squaredNorm();
                if (dist2 > far_d) {
                    far_d = dist2;
                    far = i;
                }
            }
            assign[std::size_t(far)] = c;
            counts[std::size_t(big)] -= 1;
            counts[std::size_t(c)] += 1;
            centers.row(big) -= points.row(far);
            centers.row(c) = points.row(far);
        }
        for (int c = 0; c < k; ++c) centers.row(c) /= S(counts[std::size_t(c)]);
    }
    return assign;
}

// Split every camera's identities into ceil(|Z_c| / ids_per_env) clusters
// (capped by max_splits) over their style vectors. Environment ids are
// assigned contiguously camera by camera.
template <class S>
EnvironmentAssignment split_cameras(const Dataset<S>& ds, const MatrixX<S>& style,
                                    const EnvSplitConfig<S>& cfg) {
    if (style.rows() != ds.num_ids)
        throw std::invalid_argument("split_cameras: style vector count mismatch");
    (void)camera_of_id(ds);  // enforce the one-camera-per-identity precondition

    EnvironmentAssignment out;
    out.env_of_id.assign(std::size_t(ds.num_ids), -1);
    int next_env = 0;
    for (int c = 0; c < ds.num_cameras; ++c) {
        const auto ids = ids_of_camera(ds, c);
        if (ids.empty()) continue;
        int k = cfg.forced_splits > 0
                    ? cfg.forced_splits
                    : int((ids.size() + cfg.ids_per_env - 1) / std::size_t(cfg.ids_per_env));
        k = std::clamp(k, 1, std::min<int>(cfg.max_splits, int(ids.size())));

        if (k == 1) {
            for (const int y : ids) out.env_of_id[std::size_t(y)] = next_env;
            ++next_env;
            continue;
        }
        MatrixX<S> pts(Index(ids.size()), style.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) pts.row(Index(i)) = style.row(ids[i]);
        const auto assign = kmeans(pts, k, cfg.seed + std::uint64_t(c), cfg.max_iters);
        for (std::size_t i = 0; i < ids.size(); ++i)
            out.env_of_id[std::size_t(ids[i])] = next_env + assign[i];
        next_env += k;
    }
    out.num_envs = next_env;
    return out;
}

// Epoch-wise refresh: descriptors from the current encoder, split seeded by
// base seed + epoch.
template <class S>
EnvironmentAssignment refresh(const Dataset<S>& ds, const EncoderParams<S>& params,
                              int epoch, const EnvSplitConfig<S>& cfg) {
    EnvSplitConfig<S> epoch_cfg = cfg;
    epoch_cfg.seed = cfg.seed + std::uint64_t(epoch);
    const auto style = compute_id_style(ds, params, cfg.pooling);
    return split_cameras(ds, style, epoch_cfg);
}

// Inspection dump: identity, camera, environment.
template <class S>
void save_assignment_csv(const Dataset<S>& ds, const EnvironmentAssignment& env,
                         const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os << "identity,camera,environment\n";
    const auto cam = camera_of_id(ds);
    for (int y = 0; y < ds.num_ids; ++y)
        os << y << ',' << cam[std::size_t(y)] << ',' << env.env_of_id[std::size_t(y)] << '\n';
}

}  // namespace iici
