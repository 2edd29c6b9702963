#pragma once

#include <Eigen/Core>

#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace iici {

using Index = Eigen::Index;

template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using VectorXi = Eigen::VectorXi;

// Data-file problems, reported distinctly so callers can tell a bad header
// from a bad record from a short read.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HeaderError : DataError {
    using DataError::DataError;
};
struct LabelRangeError : DataError {
    using DataError::DataError;
};
struct TruncatedError : DataError {
    using DataError::DataError;
};

// Degenerate numerics: zero-norm normalization inputs, non-finite losses.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Smallest norm we accept before calling a normalization degenerate.
template <class S>
constexpr S degenerate_norm_floor() {
    return S(16) * std::numeric_limits<S>::epsilon();
}

template <class Derived>
typename Derived::PlainObject normalized_rows(const Eigen::MatrixBase<Derived>& m) {
    using S = typename Derived::Scalar;
    typename Derived::PlainObject out = m;
    for (Index i = 0; i < out.rows(); ++i) {
        const S n = out.row(i).norm();
        if (n < degenerate_norm_floor<S>())
            throw NumericError("normalized_rows: zero-norm row " + std::to_string(i));
        out.row(i) /= n;
    }
    return out;
}

// Euclidean distance between two row vectors, formed from the explicit
// difference (no norm-expansion; keeps small distances accurate).
template <class D1, class D2>
typename D1::Scalar row_distance(const Eigen::MatrixBase<D1>& a, const Eigen::MatrixBase<D2>& b) {
    return (a - b).norm();
}

}  // namespace iici
