#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "iici/dataset.hpp"
#include "iici/encoder.hpp"
#include "iici/types.hpp"

namespace iici {

// Non-parametric class-prototype bank: one unit-norm row per identity,
// moving-average updated. Prototypes are constants inside every loss graph —
// update() is the only mutator, and loss code never receives a gradient
// buffer for them.
template <class S>
struct PrototypeBank {
    MatrixX<S> m;  // Y x d, unit-norm rows
    S mu = S(0.2);

    Index num_classes() const { return m.rows(); }
    Index dim() const { return m.cols(); }
};

// M[y] <- normalize(mu * M[y] + (1 - mu) * f). Callers pass only
// weak-augmentation features here; strong features stay out of the bank.
template <class S>
void update(PrototypeBank<S>& bank, int y, const VectorX<S>& f) {
    if (y < 0 || y >= bank.num_classes())
        throw std::invalid_argument("memory update: class " + std::to_string(y) +
                                    " out of range");
    if (f.size() != bank.dim())
        throw std::invalid_argument("memory update: feature dimension mismatch");
    const VectorX<S> blended = bank.mu * bank.m.row(y).transpose() + (S(1) - bank.mu) * f;
    const S n = blended.norm();
    if (n < degenerate_norm_floor<S>())
        throw NumericError("memory update: degenerate (zero-norm) blend for class " +
                           std::to_string(y));
    bank.m.row(y) = blended.transpose() / n;
}

// Prototypes start as normalized class means of un-augmented embeddings.
template <class S>
PrototypeBank<S> init_from_dataset(const Dataset<S>& ds, const EncoderParams<S>& params,
                                   S mu) {
    PrototypeBank<S> bank;
    bank.mu = mu;
    bank.m = MatrixX<S>::Zero(ds.num_ids, params.embed_dim());
    std::vector<int> counts(ds.num_ids, 0);
    for (const auto& s : ds.samples) {
        bank.m.row(s.y) += encode(params, s.x).embedding.transpose();
        counts[s.y] += 1;
    }
    for (int y = 0; y < ds.num_ids; ++y) {
        if (counts[y] == 0)
            throw std::invalid_argument("init_from_dataset: class " + std::to_string(y) +
                                        " has no images");
        bank.m.row(y) /= S(counts[y]);
        const S n = bank.m.row(y).norm();
        if (n < degenerate_norm_floor<S>())
            throw NumericError("init_from_dataset: degenerate prototype for class " +
                               std::to_string(y));
        bank.m.row(y) /= n;
    }
    return bank;
}

template <class S>
MatrixX<S> lookup(const PrototypeBank<S>& bank, const std::vector<int>& ids) {
    MatrixX<S> rows(Index(ids.size()), bank.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= bank.num_classes())
            throw std::invalid_argument("lookup: class out of range");
        rows.row(Index(i)) = bank.m.row(ids[i]);
    }
    return rows;
}

// Euclidean distances from f to the prototypes of the given ids, ascending,
// ties broken by lower id.
template <class S>
std::vector<std::pair<S, int>> nearest_prototypes(const PrototypeBank<S>& bank,
                                                  const VectorX<S>& f,
                                                  const std::vector<int>& ids) {
    std::vector<std::pair<S, int>> out;
    out.reserve(ids.size());
    for (const int j : ids) {
        if (j < 0 || j >= bank.num_classes())
            throw std::invalid_argument("nearest_prototypes: class out of range");
        out.emplace_back(row_distance(f.transpose(), bank.m.row(j)), j);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace iici
