#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "iici/rng.hpp"
#include "iici/types.hpp"

namespace iici {

// Two affine layers with a tanh in between; the head output is L2-normalized.
//   z1 = W1 x + b1,  a1 = tanh(z1),  z2 = W2 a1 + b2,  e = z2 / |z2|
template <class S>
struct EncoderParams {
    MatrixX<S> w1;  // H x D_raw
    VectorX<S> b1;  // H
    MatrixX<S> w2;  // d x H
    VectorX<S> b2;  // d

    Index input_dim() const { return w1.cols(); }
    Index hidden_dim() const { return w1.rows(); }
    Index embed_dim() const { return w2.rows(); }
};

template <class S>
EncoderParams<S> init_encoder(Index d_raw, Index hidden, Index embed, Rng& rng) {
    EncoderParams<S> p;
    p.w1.resize(hidden, d_raw);
    p.w2.resize(embed, hidden);
    const S s1 = S(1) / std::sqrt(S(d_raw));
    const S s2 = S(1) / std::sqrt(S(hidden));
    for (Index i = 0; i < hidden; ++i)
        for (Index j = 0; j < d_raw; ++j) p.w1(i, j) = s1 * S(rng.normal());
    for (Index i = 0; i < embed; ++i)
        for (Index j = 0; j < hidden; ++j) p.w2(i, j) = s2 * S(rng.normal());
    p.b1 = VectorX<S>::Zero(hidden);
    p.b2 = VectorX<S>::Zero(embed);
    return p;
}

// Mean/std statistics of the first layer's pre-activation contributions
// W1(h, j) * x(j), taken over input coordinates. Pooled across units they
// give a 2-vector; the per-unit variant keeps all 2H values.
template <class S>
struct StyleDescriptor {
    VectorX<S> v;  // [means..., stds...] pooled (size 2) or per-unit (size 2H)
};

enum class StylePooling { pooled, per_unit };

template <class S>
struct EncodeResult {
    VectorX<S> embedding;  // unit norm
    StyleDescriptor<S> style;
};

template <class S>
EncodeResult<S> encode(const EncoderParams<S>& p, const VectorX<S>& x,
                       StylePooling pooling = StylePooling::pooled) {
    if (x.size() != p.input_dim())
        throw std::invalid_argument("encode: input length mismatch");
    const Index h = p.hidden_dim(), dr = p.input_dim();

    const VectorX<S> z1 = p.w1 * x + p.b1;
    const VectorX<S> a1 = z1.array().tanh();
    const VectorX<S> z2 = p.w2 * a1 + p.b2;
    const S n = z2.norm();
    if (n < degenerate_norm_floor<S>())
        throw NumericError("encode: zero-norm pre-embedding");

    EncodeResult<S> out;
    out.embedding = z2 / n;

    // contributions of each input coordinate to each unit
    const MatrixX<S> contrib = p.w1.array().rowwise() * x.transpose().array();
    VectorX<S> means = contrib.rowwise().mean();
    VectorX<S> stds(h);
    for (Index i = 0; i < h; ++i)
        stds[i] = std::sqrt((contrib.row(i).array() - means[i]).square().sum() / S(dr));

    if (pooling == StylePooling::pooled) {
        out.style.v.resize(2);
        out.style.v << means.mean(), stds.mean();
    } else {
        out.style.v.resize(2 * h);
        out.style.v << means, stds;
    }
    return out;
}

template <class S>
struct ParamGrads {
    MatrixX<S> w1;
    VectorX<S> b1;
    MatrixX<S> w2;
    VectorX<S> b2;

    static ParamGrads zeros_like(const EncoderParams<S>& p) {
        return {MatrixX<S>::Zero(p.w1.rows(), p.w1.cols()), VectorX<S>::Zero(p.b1.size()),
                MatrixX<S>::Zero(p.w2.rows(), p.w2.cols()), VectorX<S>::Zero(p.b2.size())};
    }

    ParamGrads& operator+=(const ParamGrads& o) {
        w1 += o.w1;
        b1 += o.b1;
        w2 += o.w2;
        b2 += o.b2;
        return *this;
    }
};

// Parameter gradients for a loss whose gradient with respect to the
// normalized embedding e = z2/|z2| is grad_e. The normalization Jacobian is
// (I - e e^T)/|z2|, so the component of grad_e parallel to e dies here.
template <class S>
ParamGrads<S> backward(const EncoderParams<S>& p, const VectorX<S>& x,
                       const VectorX<S>& grad_e) {
    if (x.size() != p.input_dim())
        throw std::invalid_argument("backward: input length mismatch");
    if (grad_e.size() != p.embed_dim())
        throw std::invalid_argument("backward: grad length mismatch");

    const VectorX<S> z1 = p.w1 * x + p.b1;
    const VectorX<S> a1 = z1.array().tanh();
    const VectorX<S> z2 = p.w2 * a1 + p.b2;
    const S n = z2.norm();
    if (n < degenerate_norm_floor<S>())
        throw NumericError("backward: zero-norm pre-embedding");
    const VectorX<S> e = z2 / n;

    const VectorX<S> g_z2 = (grad_e - e.dot(grad_e) * e) / n;
    const VectorX<S> g_a1 = p.w2.transpose() * g_z2;
    const VectorX<S> g_z1 = g_a1.array() * (S(1) - a1.array().square());

    ParamGrads<S> g;
    g.w2 = g_z2 * a1.transpose();
    g.b2 = g_z2;
    g.w1 = g_z1 * x.transpose();
    g.b1 = g_z1;
    return g;
}

template <class S>
struct AugmentConfig {
    S weak_jitter = S(0.05);
    S weak_mask_frac = S(0.05);
    S strong_jitter = S(0.1);
    S strong_mask_frac = S(0.15);
    S strong_gain = S(0.25);    // scale of the global multiplicative jitter
    S strong_offset = S(0.1);   // scale of the global additive jitter
};

namespace detail {

// A contiguous block of floor(frac * D) coordinates, start drawn uniformly.
template <class S>
void mask_block(VectorX<S>& x, S frac, Rng& rng) {
    const Index d = x.size();
    const Index len = Index(double(frac) * double(d));
    const Index start = Index(rng.below(std::int64_t(d - len + 1)));
    if (len > 0) x.segment(start, len).setZero();
}

}  // namespace detail

// Gaussian jitter plus a small zeroed block. Draw order: D normals, then the
// block start; draws happen even at zero scales so streams stay aligned.
template <class S>
VectorX<S> augment_weak(const VectorX<S>& x, Rng& rng, const AugmentConfig<S>& cfg) {
    VectorX<S> out = x;
    for (Index j = 0; j < out.size(); ++j) out[j] += cfg.weak_jitter * S(rng.normal());
    detail::mask_block(out, cfg.weak_mask_frac, rng);
    return out;
}

// Jitter, then a global gain/offset (the style analogue of color jitter),
// then a larger zeroed block: x'' = mask(g * (x + delta) + o).
// Draw order: D normals, gain normal, offset normal, block start.
template <class S>
VectorX<S> augment_strong(const VectorX<S>& x, Rng& rng, const AugmentConfig<S>& cfg) {
    VectorX<S> out = x;
    for (Index j = 0; j < out.size(); ++j) out[j] += cfg.strong_jitter * S(rng.normal());
    const S gain = S(1) + cfg.strong_gain * S(rng.normal());
    const S offset = cfg.strong_offset * S(rng.normal());
    out = (gain * out).array() + offset;
    detail::mask_block(out, cfg.strong_mask_frac, rng);
    return out;
}

// Versioned parameter checkpoint: shapes then little-endian 32-bit floats.
namespace detail {

constexpr char kParamsMagic[8] = {'I', 'I', 'C', 'I', 'E', 'P', '0', '1'};

inline void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}
inline std::uint32_t get_u32(std::istream& is, const std::string& path) {
    std::uint32_t v;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw TruncatedError(path + ": short read");
    return v;
}

template <class S, class Mat>
void put_f32_block(std::ostream& os, const Mat& m) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            const float v = float(m(i, j));
            os.write(reinterpret_cast<const char*>(&v), 4);
        }
}

template <class Mat>
void get_f32_block(std::istream& is, Mat& m, const std::string& path) {
    using S = typename Mat::Scalar;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            float v;
            if (!is.read(reinterpret_cast<char*>(&v), 4))
                throw TruncatedError(path + ": short read in parameter block");
            m(i, j) = S(v);
        }
}

}  // namespace detail

template <class S>
void save_params(const EncoderParams<S>& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write(detail::kParamsMagic, sizeof(detail::kParamsMagic));
    detail::put_u32(os, std::uint32_t(p.input_dim()));
    detail::put_u32(os, std::uint32_t(p.hidden_dim()));
    detail::put_u32(os, std::uint32_t(p.embed_dim()));
    detail::put_f32_block<S>(os, p.w1);
    detail::put_f32_block<S>(os, p.b1);
    detail::put_f32_block<S>(os, p.w2);
    detail::put_f32_block<S>(os, p.b2);
    if (!os) throw DataError("write failed for " + path);
}

template <class S>
EncoderParams<S> load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    char magic[sizeof(detail::kParamsMagic)];
    if (!is.read(magic, sizeof(magic))) throw HeaderError(path + ": empty or short file");
    if (std::memcmp(magic, detail::kParamsMagic, 6) != 0)
        throw HeaderError(path + ": not a parameter file");
    if (std::memcmp(magic + 6, detail::kParamsMagic + 6, 2) != 0)
        throw HeaderError(path + ": unsupported version");
    const Index dr = detail::get_u32(is, path);
    const Index h = detail::get_u32(is, path);
    const Index d = detail::get_u32(is, path);
    EncoderParams<S> p;
    p.w1.resize(h, dr);
    p.b1.resize(h);
    p.w2.resize(d, h);
    p.b2.resize(d);
    detail::get_f32_block(is, p.w1, path);
    detail::get_f32_block(is, p.b1, path);
    detail::get_f32_block(is, p.w2, path);
    detail::get_f32_block(is, p.b2, path);
    return p;
}

}  // namespace iici
