// Shared helpers for building random fixtures and converting between Eigen
// storage and the oracle's plain vectors.
#pragma once

#include <vector>

#include "iici/losses.hpp"
#include "iici/rng.hpp"
#include "iici/types.hpp"
#include "oracles.hpp"

namespace testutil {

template <class S>
iici::MatrixX<S> random_unit_rows(iici::Index n, iici::Index d, iici::Rng& rng) {
    iici::MatrixX<S> m(n, d);
    for (iici::Index i = 0; i < n; ++i) {
        for (iici::Index j = 0; j < d; ++j) m(i, j) = S(rng.normal());
        m.row(i) /= m.row(i).norm();
    }
    return m;
}

// A random batch: labels drawn from [0, y) with cameras fixed per identity
// (the training regime), plus a unit-norm prototype bank covering all ids.
template <class S>
struct Fixture {
    iici::BatchView<S> batch;
    iici::PrototypeBank<S> bank;
    std::vector<int> camera_of_id;
    std::vector<int> env_of_id;
};

template <class S>
Fixture<S> random_fixture(iici::Index n, int y, int c, iici::Index d, iici::Rng& rng,
                          int envs_per_camera = 1) {
    Fixture<S> f;
    f.camera_of_id.resize(std::size_t(y));
    f.env_of_id.resize(std::size_t(y));
    for (int j = 0; j < y; ++j) {
        f.camera_of_id[std::size_t(j)] = int(rng.below(c));
        f.env_of_id[std::size_t(j)] =
            f.camera_of_id[std::size_t(j)] * envs_per_camera + int(rng.below(envs_per_camera));
    }
    f.batch.weak = random_unit_rows<S>(n, d, rng);
    f.batch.strong = random_unit_rows<S>(n, d, rng);
    f.batch.labels.resize(n);
    f.batch.cameras.resize(n);
    f.batch.envs.resize(n);
    for (iici::Index i = 0; i < n; ++i) {
        const int label = int(rng.below(y));
        f.batch.labels[i] = label;
        f.batch.cameras[i] = f.camera_of_id[std::size_t(label)];
        f.batch.envs[i] = f.env_of_id[std::size_t(label)];
    }
    f.bank.mu = S(0.2);
    f.bank.m = random_unit_rows<S>(y, d, rng);
    return f;
}

template <class S>
oracle::Mat to_oracle(const iici::MatrixX<S>& m) {
    oracle::Mat out(std::size_t(m.rows()), oracle::Vec(std::size_t(m.cols())));
    for (iici::Index i = 0; i < m.rows(); ++i)
        for (iici::Index j = 0; j < m.cols(); ++j)
            out[std::size_t(i)][std::size_t(j)] = double(m(i, j));
    return out;
}

inline std::vector<int> to_std(const iici::VectorXi& v) {
    return std::vector<int>(v.data(), v.data() + v.size());
}

inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0 ? 0 : std::abs(a - b) / scale;
}

}  // namespace testutil
