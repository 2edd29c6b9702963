// Brute-force reference implementations used only by tests. Everything here
// is written with plain loops over std::vector<double>, independent of the
// library's Eigen code paths, so agreement is a real check and not an echo.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dist(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

inline double hinge(double z) { return z > 0 ? z : 0; }

// -log softmax of sample i against prototype rows `ids`, target label y.
inline double softmax_ce(const Mat& protos, const std::vector<int>& ids, const Vec& f,
                         int y, double tau) {
    double denom = 0, num = 0;
    for (const int j : ids) {
        const double e = std::exp(dot(protos[std::size_t(j)], f) / tau);
        denom += e;
        if (j == y) num = e;
    }
    return -std::log(num / denom);
}

inline double loss_base(const Mat& emb, const std::vector<int>& labels, const Mat& protos,
                        double tau) {
    std::vector<int> all;
    for (std::size_t j = 0; j < protos.size(); ++j) all.push_back(int(j));
    double total = 0;
    for (std::size_t i = 0; i < emb.size(); ++i)
        total += softmax_ce(protos, all, emb[i], labels[i], tau);
    return total / double(emb.size());
}

// Sum over scopes of the per-scope mean of softmax CE restricted to the
// scope's identity set.
inline double loss_intra(const Mat& emb, const std::vector<int>& labels, const Mat& protos,
                         double tau, const std::vector<int>& scope_of_id) {
    std::vector<int> scopes;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const int u = scope_of_id[std::size_t(labels[i])];
        if (std::find(scopes.begin(), scopes.end(), u) == scopes.end()) scopes.push_back(u);
    }
    double total = 0;
    for (const int u : scopes) {
        std::vector<int> ids;
        for (std::size_t j = 0; j < scope_of_id.size(); ++j)
            if (scope_of_id[j] == u) ids.push_back(int(j));
        double scope_sum = 0;
        int count = 0;
        for (std::size_t i = 0; i < emb.size(); ++i) {
            if (scope_of_id[std::size_t(labels[i])] != u) continue;
            scope_sum += softmax_ce(protos, ids, emb[i], labels[i], tau);
            ++count;
        }
        total += scope_sum / double(count);
    }
    return total;
}

struct Candidates {
    bool has_pos = false, has_intra_neg = false;
    double d_pos = 0, d_intra_neg = 0;
    std::vector<double> cross;  // ascending
};

inline Candidates mine(const Mat& emb, const std::vector<int>& labels,
                       const std::vector<int>& cams, std::size_t i) {
    Candidates c;
    for (std::size_t j = 0; j < emb.size(); ++j) {
        if (j == i) continue;
        const double d = dist(emb[i], emb[j]);
        if (cams[j] == cams[i]) {
            if (labels[j] == labels[i]) {
                if (!c.has_pos || d > c.d_pos) {
                    c.has_pos = true;
                    c.d_pos = d;
                }
            } else if (!c.has_intra_neg || d < c.d_intra_neg) {
                c.has_intra_neg = true;
                c.d_intra_neg = d;
            }
        } else if (labels[j] != labels[i]) {
            c.cross.push_back(d);
        }
    }
    std::sort(c.cross.begin(), c.cross.end());
    return c;
}

// Double hinge over the k1 nearest cross-camera negatives, averaged over
// anchors that contributed at least one term. k1 = 1 is the plain MCNL loss.
inline double loss_inter1(const Mat& emb, const std::vector<int>& labels,
                          const std::vector<int>& cams, double m1, double m2, int k1) {
    double total = 0;
    int contributors = 0;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const auto c = mine(emb, labels, cams, i);
        const int kk = std::min<int>(k1, int(c.cross.size()));
        bool contributed = false;
        for (int k = 0; k < kk; ++k) {
            if (c.has_pos) {
                contributed = true;
                total += hinge(m1 + c.d_pos - c.cross[std::size_t(k)]);
            }
            if (c.has_intra_neg) {
                contributed = true;
                total += hinge(m2 + c.cross[std::size_t(k)] - c.d_intra_neg);
            }
        }
        if (contributed) ++contributors;
    }
    return contributors > 0 ? total / contributors : 0.0;
}

inline double loss_mcnl(const Mat& emb, const std::vector<int>& labels,
                        const std::vector<int>& cams, double m1, double m2) {
    return loss_inter1(emb, labels, cams, m1, m2, 1);
}

// Prototype-level double hinge: own prototype as positive, nearest foreign
// same-camera prototype as intra negative, k2 nearest other-camera prototypes
// as cross negatives.
inline double loss_inter2(const Mat& emb, const std::vector<int>& labels,
                          const std::vector<int>& cams, const Mat& protos,
                          const std::vector<int>& camera_of_id, double m1, double m2,
                          int k2) {
    double total = 0;
    int contributors = 0;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        const int y = labels[i];
        const int cam = cams[i];
        const double d_pos = dist(emb[i], protos[std::size_t(y)]);

        bool has_intra = false;
        double d_intra = 0;
        std::vector<double> cross;
        for (std::size_t j = 0; j < protos.size(); ++j) {
            const double d = dist(emb[i], protos[j]);
            if (camera_of_id[j] == cam) {
                if (int(j) != y && (!has_intra || d < d_intra)) {
                    has_intra = true;
                    d_intra = d;
                }
            } else {
                cross.push_back(d);
            }
        }
        std::sort(cross.begin(), cross.end());

        const int kk = std::min<int>(k2, int(cross.size()));
        if (kk > 0) ++contributors;
        for (int k = 0; k < kk; ++k) {
            total += hinge(m1 + d_pos - cross[std::size_t(k)]);
            if (has_intra) total += hinge(m2 + cross[std::size_t(k)] - d_intra);
        }
    }
    return contributors > 0 ? total / contributors : 0.0;
}

struct RetrievalOracle {
    double map = 0;
    double r1 = 0, r5 = 0, r10 = 0;
    int evaluated = 0;
    int dropped = 0;
};

// Rank-by-counting evaluation: no sorting, ranks from pairwise lexicographic
// (distance, index) comparisons.
inline RetrievalOracle evaluate(const Mat& qe, const std::vector<int>& qy,
                                const std::vector<int>& qc, const Mat& ge,
                                const std::vector<int>& gy, const std::vector<int>& gc) {
    RetrievalOracle res;
    double ap_sum = 0;
    int h1 = 0, h5 = 0, h10 = 0;
    for (std::size_t q = 0; q < qe.size(); ++q) {
        std::vector<std::size_t> valid;
        int positives = 0;
        for (std::size_t g = 0; g < ge.size(); ++g) {
            if (gy[g] == qy[q] && gc[g] == qc[q]) continue;
            valid.push_back(g);
            if (gy[g] == qy[q]) ++positives;
        }
        if (positives == 0) {
            ++res.dropped;
            continue;
        }
        std::vector<double> dists(valid.size());
        for (std::size_t a = 0; a < valid.size(); ++a) dists[a] = dist(qe[q], ge[valid[a]]);

        double ap = 0;
        int best_rank = std::numeric_limits<int>::max();
        for (std::size_t a = 0; a < valid.size(); ++a) {
            if (gy[valid[a]] != qy[q]) continue;
            int rank = 1, pos_at_or_before = 0;
            for (std::size_t b = 0; b < valid.size(); ++b) {
                const bool before = dists[b] < dists[a] ||
                                    (dists[b] == dists[a] && valid[b] < valid[a]);
                if (b != a && before) ++rank;
                if (gy[valid[b]] == qy[q] && (b == a || before)) ++pos_at_or_before;
            }
            ap += double(pos_at_or_before) / double(rank);
            best_rank = std::min(best_rank, rank);
        }
        ap /= double(positives);
        ap_sum += ap;
        ++res.evaluated;
        if (best_rank <= 1) ++h1;
        if (best_rank <= 5) ++h5;
        if (best_rank <= 10) ++h10;
    }
    res.map = ap_sum / double(res.evaluated);
    res.r1 = double(h1) / res.evaluated;
    res.r5 = double(h5) / res.evaluated;
    res.r10 = double(h10) / res.evaluated;
    return res;
}

// Minimal within-cluster SSE over every assignment of n points to k clusters.
inline std::vector<int> best_partition(const Mat& pts, int k) {
    const std::size_t n = pts.size();
    std::vector<int> best, cur(n, 0);
    double best_sse = std::numeric_limits<double>::max();
    const auto total = std::size_t(std::pow(double(k), double(n)));
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            cur[i] = int(c % std::size_t(k));
            c /= std::size_t(k);
        }
        double sse = 0;
        bool any_empty = false;
        for (int cl = 0; cl < k; ++cl) {
            Vec mean(pts[0].size(), 0.0);
            int count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (cur[i] != cl) continue;
                for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += pts[i][j];
                ++count;
            }
            if (count == 0) {
                any_empty = true;
                break;
            }
            for (auto& m : mean) m /= count;
            for (std::size_t i = 0; i < n; ++i)
                if (cur[i] == cl)
                    for (std::size_t j = 0; j < mean.size(); ++j)
                        sse += (pts[i][j] - mean[j]) * (pts[i][j] - mean[j]);
        }
        if (!any_empty && sse < best_sse) {
            best_sse = sse;
            best = cur;
        }
    }
    return best;
}

inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    return true;
}

}  // namespace oracle
