#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fog/tensorcore/tape.hpp"

namespace fog {

using IndexVector = std::vector<std::uint32_t>;

enum class ActivationKind { identity, relu, leaky_relu, elu, sigmoid };

struct Activation {
    ActivationKind kind = ActivationKind::identity;
    double alpha = 0.2;  // leaky_relu slope

    static Activation identity() { return {ActivationKind::identity, 0.0}; }
    static Activation relu() { return {ActivationKind::relu, 0.0}; }
    static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::leaky_relu, slope}; }
    static Activation elu() { return {ActivationKind::elu, 1.0}; }
    static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
};

// Every primitive below records one tape node whose backward closure is the
// exact adjoint of the forward map.

/// [m x k] . [k x n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

/// [m x k] . [n x k]^T, i.e. applying a weight stored as out x in to row vectors.
template <typename T>
Var<T> matmul_transposed(Var<T> a, Var<T> b);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);
template <typename T>
Var<T> sub(Var<T> a, Var<T> b);
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);
template <typename T>
Var<T> div(Var<T> a, Var<T> b);

/// x * c for a constant c.
template <typename T>
Var<T> scale(Var<T> x, double c);

/// x + c for a constant c.
template <typename T>
Var<T> add_scalar(Var<T> x, double c);

/// x * s where s is a single-element tensor on the tape (e.g. GIN's epsilon).
template <typename T>
Var<T> scale_by(Var<T> x, Var<T> s);

/// Add a length-C vector to every row of [.. x C].
template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias);

template <typename T>
Var<T> activation(Var<T> x, Activation act);

template <typename T>
Var<T> relu(Var<T> x) {
    return activation(x, Activation::relu());
}
template <typename T>
Var<T> elu(Var<T> x) {
    return activation(x, Activation::elu());
}
template <typename T>
Var<T> sigmoid(Var<T> x) {
    return activation(x, Activation::sigmoid());
}
template <typename T>
Var<T> leaky_relu(Var<T> x, double slope = 0.2) {
    return activation(x, Activation::leaky_relu(slope));
}

/// Join along the trailing (channel) axis.
template <typename T>
Var<T> concat(Var<T> a, Var<T> b);

/// Columns [begin, begin + count) of the trailing axis.
template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t count);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

/// Kronecker product of two rank-1 tensors: out[i*Cb + j] = a[i] * b[j].
template <typename T>
Var<T> kron(Var<T> a, Var<T> b);

/// Row-wise Kronecker product of [N x Ca] and [N x Cb] into [N x Ca*Cb].
template <typename T>
Var<T> rowwise_kron(Var<T> a, Var<T> b);

/// out[e] = x[index[e]] for every row.
template <typename T>
Var<T> gather_rows(Var<T> x, const IndexVector& index);

/// out[s] = sum of rows e with segments[e] == s; empty segments give zero rows.
template <typename T>
Var<T> segment_sum(Var<T> values, const IndexVector& segments, std::size_t n_segments);

/// Softmax of each column over the rows sharing a segment id. Accepts [E] or
/// [E x K] (one independent softmax per column). Throws EmptyNeighborhoodError
/// when `require_nonempty` and some segment in [0, n_segments) has no rows.
template <typename T>
Var<T> segment_softmax(Var<T> logits, const IndexVector& segments, std::size_t n_segments,
                       bool require_nonempty = true);

/// Multiply row e by the constant weights[e].
template <typename T>
Var<T> scale_rows(Var<T> x, std::vector<T> weights);

/// Per-head dot products: x is [N x K*d], a is [K x d]; out[n, k] = <x[n, k*d:(k+1)*d], a[k]>.
template <typename T>
Var<T> head_dot(Var<T> x, Var<T> a);

/// Per-head scaling: weights [E x K], values [E x K*d]; block k of row e is scaled by weights[e, k].
template <typename T>
Var<T> mul_heads(Var<T> weights, Var<T> values);

/// Sum of all elements, as a scalar.
template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> mean(Var<T> x);

}  // namespace fog
