#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "iici/memory.hpp"
#include "iici/types.hpp"

namespace iici {

template <class S>
struct LossConfig {
    S tau = S(0.05);  // softmax temperature
    S m1 = S(0.1);    // margin: positive vs cross-camera negative
    S m2 = S(0.1);    // margin: cross-camera vs intra-camera negative
    int k1 = 10;      // cross-camera hard negative instances
    int k2 = 20;      // cross-camera hard negative prototypes
};

template <class S>
void validate(const LossConfig<S>& cfg) {
    if (!(cfg.tau > S(0))) throw std::invalid_argument("LossConfig: tau must be > 0");
    if (cfg.m1 < S(0) || cfg.m2 < S(0)) throw std::invalid_argument("LossConfig: margins must be >= 0");
    if (cfg.k1 < 1 || cfg.k2 < 1) throw std::invalid_argument("LossConfig: k1, k2 must be >= 1");
}

// One mini-batch, both augmented views already encoded. Rows of `weak` and
// `strong` are unit-norm embeddings of the same underlying images.
template <class S>
struct BatchView {
    MatrixX<S> weak;
    MatrixX<S> strong;
    VectorXi labels;
    VectorXi cameras;
    VectorXi envs;

    Index size() const { return labels.size(); }
};

// Loss value plus gradients with respect to the batch embeddings. Prototypes
// never get a gradient buffer; they are constants by construction.
template <class S>
struct LossOut {
    S value = S(0);
    MatrixX<S> grad_weak;
    MatrixX<S> grad_strong;

    static LossOut zeros(Index n, Index d) {
        return {S(0), MatrixX<S>::Zero(n, d), MatrixX<S>::Zero(n, d)};
    }
};

namespace detail {

// Groups batch rows by the scope of their identity; scope_of_id also induces
// the per-scope candidate identity sets Z_scope.
inline std::vector<int> scope_ids(const std::vector<int>& scope_of_id, int scope) {
    std::vector<int> ids;
    for (std::size_t j = 0; j < scope_of_id.size(); ++j)
        if (scope_of_id[j] == scope) ids.push_back(int(j));
    return ids;
}

// -log softmax cross-entropy of embedding row `row` against the prototypes
// of `ids`, target y, temperature tau. Accumulates a scaled gradient for the
// embedding into grad; the prototypes stay constant.
template <class S>
S proto_ce(const MatrixX<S>& protos, const std::vector<int>& ids, const MatrixX<S>& emb,
           Index row, int y, S tau, S grad_scale, MatrixX<S>& grad) {
    const Index k = Index(ids.size());
    VectorX<S> sims(k);
    Index target = -1;
    for (Index a = 0; a < k; ++a) {
        sims[a] = protos.row(ids[std::size_t(a)]).dot(emb.row(row)) / tau;
        if (ids[std::size_t(a)] == y) target = a;
    }
    if (target < 0)
        throw std::invalid_argument("intra loss: label " + std::to_string(y) +
                                    " missing from its scope's identity set");
    const S mx = sims.maxCoeff();
    const VectorX<S> ex = (sims.array() - mx).exp();
    const S denom = ex.sum();
    const S ce = std::log(denom) - (sims[target] - mx);

    for (Index a = 0; a < k; ++a) {
        const S p = ex[a] / denom;
        const S coef = grad_scale * (p - (a == target ? S(1) : S(0))) / tau;
        grad.row(row) += coef * protos.row(ids[std::size_t(a)]);
    }
    return ce;
}

}  // namespace detail

// Global prototypical contrast: mean over the batch of -log softmax against
// all class prototypes.
template <class S>
LossOut<S> loss_base(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                     const LossConfig<S>& cfg) {
    const Index n = batch.size(), d = bank.dim();
    auto out = LossOut<S>::zeros(n, d);
    if (n == 0) return out;

    std::vector<int> all_ids(std::size_t(bank.num_classes()));
    for (std::size_t j = 0; j < all_ids.size(); ++j) all_ids[j] = int(j);

    S total = S(0);
    for (Index i = 0; i < n; ++i)
        total += detail::proto_ce<S>(bank.m, all_ids, batch.weak, i, batch.labels[i],
                                     cfg.tau, S(1) / S(n), out.grad_weak);
    out.value = total / S(n);
    return out;
}

namespace detail {

// Shared body of the scoped intra losses: sum over scopes of the per-scope
// mean of -log softmax restricted to that scope's identities.
template <class S>
LossOut<S> scoped_ce(const MatrixX<S>& emb, const VectorXi& labels,
                     const PrototypeBank<S>& bank, S tau,
                     const std::vector<int>& scope_of_id) {
    const Index n = labels.size(), d = bank.dim();
    auto out = LossOut<S>::zeros(n, d);

    std::vector<int> present;  // scopes appearing in the batch, ascending
    for (Index i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || std::size_t(y) >= scope_of_id.size())
            throw std::invalid_argument("intra loss: label outside scope map");
        const int u = scope_of_id[y];
        if (std::find(present.begin(), present.end(), u) == present.end()) present.push_back(u);
    }
    std::sort(present.begin(), present.end());

    for (const int u : present) {
        std::vector<Index> members;
        for (Index i = 0; i < n; ++i)
            if (scope_of_id[labels[i]] == u) members.push_back(i);
        const auto ids = scope_ids(scope_of_id, u);
        const S inv = S(1) / S(members.size());
        S scope_sum = S(0);
        for (const Index i : members)
            scope_sum += proto_ce<S>(bank.m, ids, emb, i, labels[i], tau, inv, out.grad_weak);
        out.value += inv * scope_sum;
    }
    return out;
}

}  // namespace detail

// Intra-camera (scope = camera map) or intra-environment (scope = environment
// map) contrast on the weak view. scope_of_id maps every identity to its
// scope; the softmax denominator for an image runs over its scope's ids.
template <class S>
LossOut<S> loss_intra_env(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                          const LossConfig<S>& cfg, const std::vector<int>& scope_of_id) {
    return detail::scoped_ce(batch.weak, batch.labels, bank, cfg.tau, scope_of_id);
}

// Same contrast evaluated on the strong view; prototypes keep their
// weak-view state, so this term only moves the strong embeddings.
template <class S>
LossOut<S> loss_intra_aug(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                          const LossConfig<S>& cfg, const std::vector<int>& scope_of_id) {
    auto res = detail::scoped_ce(batch.strong, batch.labels, bank, cfg.tau, scope_of_id);
    res.grad_strong.swap(res.grad_weak);
    return res;
}

// Total intra-environment objective: weak-view term plus strong-view term.
template <class S>
LossOut<S> loss_env(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                    const LossConfig<S>& cfg, const std::vector<int>& scope_of_id) {
    auto a = loss_intra_env(batch, bank, cfg, scope_of_id);
    const auto b = loss_intra_aug(batch, bank, cfg, scope_of_id);
    a.value += b.value;
    a.grad_strong += b.grad_strong;
    return a;
}

// Batch-hard candidates for one anchor. Distances are Euclidean; "hardest
// positive" is the farthest same-id same-camera instance, "hardest negative"
// the nearest different-id instance of the matching camera relation.
template <class S>
struct MinedAnchor {
    bool has_intra_pos = false;
    S d_intra_pos = S(0);
    Index intra_pos = -1;
    bool has_intra_neg = false;
    S d_intra_neg = S(0);
    Index intra_neg = -1;
    std::vector<std::pair<S, Index>> cross_negs;  // ascending distance, ties by index
};

template <class S>
using MinedSets = std::vector<MinedAnchor<S>>;

template <class S>
MinedSets<S> mine_batch(const MatrixX<S>& emb, const VectorXi& labels, const VectorXi& cameras) {
    const Index n = labels.size();
    MinedSets<S> mined(std::size_t(n));
    for (Index i = 0; i < n; ++i) {
        auto& a = mined[std::size_t(i)];
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const S dist = row_distance(emb.row(i), emb.row(j));
            if (cameras[j] == cameras[i]) {
                if (labels[j] == labels[i]) {
                    if (!a.has_intra_pos || dist > a.d_intra_pos) {
                        a.has_intra_pos = true;
                        a.d_intra_pos = dist;
                        a.intra_pos = j;
                    }
                } else if (!a.has_intra_neg || dist < a.d_intra_neg) {
                    a.has_intra_neg = true;
                    a.d_intra_neg = dist;
                    a.intra_neg = j;
                }
            } else if (labels[j] != labels[i]) {
                a.cross_negs.emplace_back(dist, j);
            }
        }
        std::sort(a.cross_negs.begin(), a.cross_negs.end());
    }
    return mined;
}

template <class S>
MinedSets<S> mine_batch(const BatchView<S>& batch) {
    return mine_batch(batch.weak, batch.labels, batch.cameras);
}

namespace detail {

// d|f - g|/df accumulated into grad rows; zero subgradient at coincident
// points and at inactive hinges.
template <class S>
void add_dist_grad(MatrixX<S>& grad, Index fi, Index gi, const MatrixX<S>& emb, S dist,
                   S coef) {
    if (dist < degenerate_norm_floor<S>()) return;
    const auto diff = (emb.row(fi) - emb.row(gi)) / dist;
    grad.row(fi) += coef * diff;
    if (gi >= 0) grad.row(gi) -= coef * diff;
}

// Same for a distance to a constant prototype row: only the anchor moves.
template <class S, class D1, class D2>
void add_proto_dist_grad(MatrixX<S>& grad, Index fi, const Eigen::MatrixBase<D1>& f,
                         const Eigen::MatrixBase<D2>& proto, S dist, S coef) {
    if (dist < degenerate_norm_floor<S>()) return;
    grad.row(fi) += coef * (f - proto) / dist;
}

// Double hinge over the k nearest cross-camera instance negatives. The
// normalizer counts anchors that contributed at least one hinge term;
// anchors missing a candidate skip just the affected term.
template <class S>
LossOut<S> instance_margin_loss(const MatrixX<S>& emb, const VectorXi& labels,
                                const VectorXi& cameras, S m1, S m2, int k1) {
    const Index n = labels.size(), d = emb.cols();
    auto out = LossOut<S>::zeros(n, d);
    const auto mined = mine_batch(emb, labels, cameras);

    S total = S(0);
    int contributors = 0;
    MatrixX<S> grad = MatrixX<S>::Zero(n, d);
    for (Index i = 0; i < n; ++i) {
        const auto& a = mined[std::size_t(i)];
        const int kk = std::min<int>(k1, int(a.cross_negs.size()));
        bool contributed = false;
        for (int k = 0; k < kk; ++k) {
            const auto [d_cross, j_cross] = a.cross_negs[std::size_t(k)];
            if (a.has_intra_pos) {
                contributed = true;
                const S h = m1 + a.d_intra_pos - d_cross;
                if (h > S(0)) {
                    total += h;
                    add_dist_grad(grad, i, a.intra_pos, emb, a.d_intra_pos, S(1));
                    add_dist_grad(grad, i, j_cross, emb, d_cross, S(-1));
                }
            }
            if (a.has_intra_neg) {
                contributed = true;
                const S h = m2 + d_cross - a.d_intra_neg;
                if (h > S(0)) {
                    total += h;
                    add_dist_grad(grad, i, j_cross, emb, d_cross, S(1));
                    add_dist_grad(grad, i, a.intra_neg, emb, a.d_intra_neg, S(-1));
                }
            }
        }
        if (contributed) ++contributors;
    }
    if (contributors > 0) {
        out.value = total / S(contributors);
        out.grad_weak = grad / S(contributors);
    }
    return out;
}

}  // namespace detail

// Double hinge on batch-hard candidates: the cross-camera hardest negative
// must sit farther than the intra-camera hardest positive (margin m1) and
// closer than the intra-camera hardest negative (margin m2).
template <class S>
LossOut<S> loss_mcnl(const BatchView<S>& batch, const LossConfig<S>& cfg) {
    return detail::instance_margin_loss(batch.weak, batch.labels, batch.cameras, cfg.m1,
                                        cfg.m2, 1);
}

// The k1-extended form; k1 = 1 reproduces loss_mcnl bit for bit.
template <class S>
LossOut<S> loss_inter1(const BatchView<S>& batch, const LossConfig<S>& cfg) {
    return detail::instance_margin_loss(batch.weak, batch.labels, batch.cameras, cfg.m1,
                                        cfg.m2, cfg.k1);
}

// Prototype-level counterpart of loss_inter1: the anchor's own prototype is
// the positive, the nearest same-camera foreign prototype the intra negative,
// and the k2 nearest other-camera prototypes the cross negatives. Prototypes
// are constants; gradients reach only the embeddings.
template <class S>
LossOut<S> loss_inter2(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                       const LossConfig<S>& cfg, const std::vector<int>& camera_of_id) {
    const Index n = batch.size(), d = bank.dim();
    auto out = LossOut<S>::zeros(n, d);
    if (std::size_t(bank.num_classes()) != camera_of_id.size())
        throw std::invalid_argument("loss_inter2: camera map size mismatch");

    S total = S(0);
    int contributors = 0;
    MatrixX<S> grad = MatrixX<S>::Zero(n, d);
    for (Index i = 0; i < n; ++i) {
        const int y = batch.labels[i];
        const int cam = batch.cameras[i];
        const auto f = batch.weak.row(i);

        const S d_pos = row_distance(f, bank.m.row(y));

        // nearest same-camera foreign prototype; ties to the lower id
        bool has_intra = false;
        S d_intra = S(0);
        Index intra_id = -1;
        for (int j = 0; j < int(camera_of_id.size()); ++j) {
            if (j == y || camera_of_id[std::size_t(j)] != cam) continue;
            const S dist = row_distance(f, bank.m.row(j));
            if (!has_intra || dist < d_intra) {
                has_intra = true;
                d_intra = dist;
                intra_id = j;
            }
        }

        std::vector<std::pair<S, int>> cross;
        for (int j = 0; j < int(camera_of_id.size()); ++j)
            if (camera_of_id[std::size_t(j)] != cam)
                cross.emplace_back(row_distance(f, bank.m.row(j)), j);
        std::sort(cross.begin(), cross.end());

        const int kk = std::min<int>(cfg.k2, int(cross.size()));
        bool contributed = kk > 0;  // the positive prototype always exists
        for (int k = 0; k < kk; ++k) {
            const auto [d_cross, j_cross] = cross[std::size_t(k)];
            {
                const S h = cfg.m1 + d_pos - d_cross;
                if (h > S(0)) {
                    total += h;
                    detail::add_proto_dist_grad(grad, i, f, bank.m.row(y), d_pos, S(1));
                    detail::add_proto_dist_grad(grad, i, f, bank.m.row(j_cross), d_cross, S(-1));
                }
            }
            if (has_intra) {
                const S h = cfg.m2 + d_cross - d_intra;
                if (h > S(0)) {
                    total += h;
                    detail::add_proto_dist_grad(grad, i, f, bank.m.row(j_cross), d_cross, S(1));
                    detail::add_proto_dist_grad(grad, i, f, bank.m.row(intra_id), d_intra, S(-1));
                }
            }
        }
        if (contributed) ++contributors;
    }
    if (contributors > 0) {
        out.value = total / S(contributors);
        out.grad_weak = grad / S(contributors);
    }
    return out;
}

// Combined inter-camera objective, weak view only.
template <class S>
LossOut<S> loss_inter(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                      const LossConfig<S>& cfg, const std::vector<int>& camera_of_id) {
    auto a = loss_inter1(batch, cfg);
    const auto b = loss_inter2(batch, bank, cfg, camera_of_id);
    a.value += b.value;
    a.grad_weak += b.grad_weak;
    return a;
}

// Full objective: intra-environment terms plus inter-camera terms.
template <class S>
LossOut<S> loss_overall(const BatchView<S>& batch, const PrototypeBank<S>& bank,
                        const LossConfig<S>& cfg, const std::vector<int>& env_of_id,
                        const std::vector<int>& camera_of_id) {
    auto a = loss_env(batch, bank, cfg, env_of_id);
    const auto b = loss_inter(batch, bank, cfg, camera_of_id);
    a.value += b.value;
    a.grad_weak += b.grad_weak;
    return a;
}

}  // namespace iici
