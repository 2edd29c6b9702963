#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "iici/dataset.hpp"
#include "iici/encoder.hpp"
#include "iici/losses.hpp"
#include "iici/rng.hpp"
#include "iici/types.hpp"

namespace iici {

struct RetrievalResult {
    double map = 0.0;
    std::map<int, double> cmc;  // rank -> accuracy, ranks {1, 5, 10}
    std::vector<double> per_query_ap;
    int queries_evaluated = 0;
    int queries_dropped = 0;  // queries with no valid positive
};

// Test-time features: un-augmented embeddings in dataset order.
template <class S>
MatrixX<S> extract(const Dataset<S>& ds, const EncoderParams<S>& params) {
    MatrixX<S> emb(ds.size(), params.embed_dim());
    for (Index i = 0; i < ds.size(); ++i)
        emb.row(i) = encode(params, ds.samples[std::size_t(i)].x).embedding.transpose();
    return emb;
}

// Cross-camera retrieval. Per query, gallery entries sharing both identity
// and camera are excluded; the rest are ranked by ascending Euclidean
// distance with ties broken by gallery index. AP is the mean of the
// precisions at each positive's rank. Queries without any valid positive are
// dropped from both metrics and counted.
template <class S>
RetrievalResult evaluate(const MatrixX<S>& query_emb, const VectorXi& query_ids,
                         const VectorXi& query_cams, const MatrixX<S>& gallery_emb,
                         const VectorXi& gallery_ids, const VectorXi& gallery_cams) {
    const Index nq = query_ids.size(), ng = gallery_ids.size();
    if (nq == 0 || ng == 0) throw std::invalid_argument("evaluate: empty query or gallery");

    RetrievalResult res;
    const std::vector<int> ranks = {1, 5, 10};
    std::map<int, int> hits;
    for (const int r : ranks) hits[r] = 0;

    double ap_sum = 0.0;
    for (Index q = 0; q < nq; ++q) {
        std::vector<std::pair<S, Index>> order;
        order.reserve(std::size_t(ng));
        int positives = 0;
        for (Index g = 0; g < ng; ++g) {
            const bool same_id = gallery_ids[g] == query_ids[q];
            if (same_id && gallery_cams[g] == query_cams[q]) continue;
            order.emplace_back(row_distance(query_emb.row(q), gallery_emb.row(g)), g);
            if (same_id) ++positives;
        }
        if (positives == 0) {
            ++res.queries_dropped;
            continue;
        }
        std::sort(order.begin(), order.end());

        double ap = 0.0;
        int found = 0;
        int first_hit = -1;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (gallery_ids[order[r].second] != query_ids[q]) continue;
            ++found;
            ap += double(found) / double(r + 1);
            if (first_hit < 0) first_hit = int(r + 1);
            if (found == positives) break;
        }
        ap /= double(positives);
        ap_sum += ap;
        res.per_query_ap.push_back(ap);
        ++res.queries_evaluated;
        for (const int r : ranks)
            if (first_hit <= r) hits[r] += 1;
    }
    if (res.queries_evaluated == 0)
        throw std::invalid_argument("evaluate: every query was dropped");

    res.map = ap_sum / double(res.queries_evaluated);
    for (const int r : ranks) res.cmc[r] = double(hits[r]) / double(res.queries_evaluated);
    return res;
}

enum class ProbeKind { logistic, nearest_mean };

struct ProbeResult {
    double accuracy = 0.0;
    double chance = 0.0;
    bool degenerate = false;  // single camera
};

// Diagnostic classifier predicting the camera from an embedding; lower
// held-out accuracy means stronger camera invariance. 70/30 split. Never
// feeds gradients anywhere.
template <class S>
ProbeResult camera_probe(const MatrixX<S>& emb, const VectorXi& cams, std::uint64_t seed,
                         ProbeKind kind = ProbeKind::logistic, int iters = 300) {
    const Index n = emb.rows(), d = emb.cols();
    if (n < 4) throw std::invalid_argument("camera_probe: too few samples");
    const int c_max = cams.maxCoeff();
    const int num_cams = c_max + 1;

    ProbeResult res;
    res.chance = 1.0 / double(num_cams);
    if (num_cams == 1) {
        res.accuracy = 1.0;
        res.chance = 1.0;
        res.degenerate = true;
        return res;
    }

    Rng rng = substream(seed, "probe");
    std::vector<Index> idx(std::size_t(n));
    for (Index i = 0; i < n; ++i) idx[std::size_t(i)] = i;
    for (Index i = 0; i < n - 1; ++i) {
        const auto j = i + rng.below(std::int64_t(n - i));
        std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    const Index n_train = (n * 7) / 10;

    // double internally regardless of the embedding scalar
    MatrixX<double> xtr(n_train, d), xte(n - n_train, d);
    std::vector<int> ytr(std::size_t(n_train)), yte(std::size_t(n - n_train));
    for (Index i = 0; i < n_train; ++i) {
        xtr.row(i) = emb.row(idx[std::size_t(i)]).template cast<double>();
        ytr[std::size_t(i)] = cams[idx[std::size_t(i)]];
    }
    for (Index i = n_train; i < n; ++i) {
        xte.row(i - n_train) = emb.row(idx[std::size_t(i)]).template cast<double>();
        yte[std::size_t(i - n_train)] = cams[idx[std::size_t(i)]];
    }

    MatrixX<double> scores_te;
    if (kind == ProbeKind::nearest_mean) {
        MatrixX<double> means = MatrixX<double>::Zero(num_cams, d);
        std::vector<int> counts(std::size_t(num_cams), 0);
        for (Index i = 0; i < n_train; ++i) {
            means.row(ytr[std::size_t(i)]) += xtr.row(i);
            counts[std::size_t(ytr[std::size_t(i)])] += 1;
        }
        for (int c = 0; c < num_cams; ++c)
            if (counts[std::size_t(c)] > 0) means.row(c) /= double(counts[std::size_t(c)]);
        scores_te.resize(xte.rows(), num_cams);
        for (Index i = 0; i < xte.rows(); ++i)
            for (int c = 0; c < num_cams; ++c)
                scores_te(i, c) = -(xte.row(i) - means.row(c)).squaredNorm();
    } else {
        // full-batch softmax regression, fixed step count
        MatrixX<double> w = MatrixX<double>::Zero(num_cams, d);
        VectorX<double> b = VectorX<double>::Zero(num_cams);
        const double lr = 2.0;
        for (int it = 0; it < iters; ++it) {
            MatrixX<double> logits = xtr * w.transpose();
            logits.rowwise() += b.transpose();
            MatrixX<double> p(logits.rows(), logits.cols());
            for (Index i = 0; i < logits.rows(); ++i) {
                const double mx = logits.row(i).maxCoeff();
                p.row(i) = (logits.row(i).array() - mx).exp();
                p.row(i) /= p.row(i).sum();
                p(i, ytr[std::size_t(i)]) -= 1.0;
            }
            w -= (lr / double(n_train)) * (p.transpose() * xtr);
            b -= (lr / double(n_train)) * p.colwise().sum().transpose();
        }
        scores_te = xte * w.transpose();
        scores_te.rowwise() += b.transpose();
    }

    int correct = 0;
    for (Index i = 0; i < scores_te.rows(); ++i) {
        Index pred;
        scores_te.row(i).maxCoeff(&pred);
        if (int(pred) == yte[std::size_t(i)]) ++correct;
    }
    res.accuracy = double(correct) / double(scores_te.rows());
    return res;
}

// Fraction of anchors, over sampled batches, whose batch-hard candidates obey
// d(intra positive) < d(cross negative) < d(intra negative). Anchors missing
// any of the three candidates are skipped.
template <class S>
double mcnl_order_rate(const MatrixX<S>& emb, const VectorXi& labels, const VectorXi& cams,
                       const std::vector<std::vector<Index>>& batches) {
    long satisfied = 0, considered = 0;
    for (const auto& batch : batches) {
        const Index b = Index(batch.size());
        MatrixX<S> e(b, emb.cols());
        VectorXi y(b), c(b);
        for (Index i = 0; i < b; ++i) {
            e.row(i) = emb.row(batch[std::size_t(i)]);
            y[i] = labels[batch[std::size_t(i)]];
            c[i] = cams[batch[std::size_t(i)]];
        }
        const auto mined = mine_batch(e, y, c);
        for (const auto& a : mined) {
            if (!a.has_intra_pos || !a.has_intra_neg || a.cross_negs.empty()) continue;
            ++considered;
            const S d_cross = a.cross_negs.front().first;
            if (a.d_intra_pos < d_cross && d_cross < a.d_intra_neg) ++satisfied;
        }
    }
    if (considered == 0) throw NumericError("mcnl_order_rate: no anchor had all three candidates");
    return double(satisfied) / double(considered);
}

}  // namespace iici
