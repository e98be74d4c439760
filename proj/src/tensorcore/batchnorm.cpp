#include "fog/tensorcore/batchnorm.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace fog {

template <typename T>
Var<T> batchnorm(Var<T> x, BatchNormState<T>& state) {
    if (!x.valid()) throw TapeError("batchnorm: unbound variable");
    if (state.mode == BnMode::identity) return x;

    Tape<T>& tape = *x.tape();
    const Tensor<T>& X = x.value();
    if (X.rank() != 2) throw RankError("batchnorm: expected [N x C], got " + shape_to_string(X.shape()));
    const std::size_t n = X.shape()[0], c = X.shape()[1];
    if (c != state.channels()) {
        throw DimensionError("batchnorm: input " + shape_to_string(X.shape()) + " but state has " +
                             std::to_string(state.channels()) + " channels");
    }
    Var<T> gamma = tape.param(state.gamma);
    Var<T> beta = tape.param(state.beta);
    const Tensor<T>& G = gamma.value();
    const Tensor<T>& B = beta.value();

    const bool train = state.mode == BnMode::train;
    if (train && n == 1) {
        throw DegenerateBatchError("batchnorm: a single row has no batch variance; use eval mode or a larger batch");
    }

    // Per-channel shift and inverse standard deviation.
    auto mean = std::make_shared<std::vector<T>>(c, T{0});
    auto inv_std = std::make_shared<std::vector<T>>(c, T{0});
    if (train && n > 0) {
        std::vector<T> var(c, T{0});
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < c; ++j) (*mean)[j] += X[r * c + j];
        for (std::size_t j = 0; j < c; ++j) (*mean)[j] /= static_cast<T>(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t j = 0; j < c; ++j) {
                const T d = X[r * c + j] - (*mean)[j];
                var[j] += d * d;
            }
        const T m = static_cast<T>(state.momentum);
        for (std::size_t j = 0; j < c; ++j) {
            var[j] /= static_cast<T>(n);
            (*inv_std)[j] = T{1} / std::sqrt(var[j] + static_cast<T>(state.eps));
            const T unbiased = var[j] * static_cast<T>(n) / static_cast<T>(n - 1);
            state.running_mean[j] = (T{1} - m) * state.running_mean[j] + m * (*mean)[j];
            state.running_var[j] = (T{1} - m) * state.running_var[j] + m * unbiased;
        }
    } else {
        for (std::size_t j = 0; j < c; ++j) {
            (*mean)[j] = state.running_mean[j];
            (*inv_std)[j] = T{1} / std::sqrt(state.running_var[j] + static_cast<T>(state.eps));
        }
    }

    Tensor<T> out({n, c});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j)
            out[r * c + j] = G[j] * (X[r * c + j] - (*mean)[j]) * (*inv_std)[j] + B[j];

    const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
    return tape.record(std::move(out), {ix, ig, ib},
                       [ix, ig, ib, n, c, train, mean, inv_std](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& X = t.value(ix);
                           const Tensor<T>& G = t.value(ig);
                           std::vector<T> sum_g(c, T{0}), sum_gx(c, T{0});
                           for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t j = 0; j < c; ++j) {
                                   const T xhat = (X[r * c + j] - (*mean)[j]) * (*inv_std)[j];
                                   sum_g[j] += g[r * c + j];
                                   sum_gx[j] += g[r * c + j] * xhat;
                               }
                           if (t.needs_grad(ig)) {
                               Tensor<T>& gg = t.grad_accumulator(ig);
                               for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gx[j];
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gb = t.grad_accumulator(ib);
                               for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
                           }
                           if (!t.needs_grad(ix)) return;
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           if (!train) {
                               for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t j = 0; j < c; ++j)
                                       gx[r * c + j] += g[r * c + j] * G[j] * (*inv_std)[j];
                               return;
                           }
                           const T inv_n = T{1} / static_cast<T>(n);
                           for (std::size_t r = 0; r < n; ++r)
                               for (std::size_t j = 0; j < c; ++j) {
                                   const T xhat = (X[r * c + j] - (*mean)[j]) * (*inv_std)[j];
                                   gx[r * c + j] += G[j] * (*inv_std)[j] *
                                                    (g[r * c + j] - inv_n * sum_g[j] - xhat * inv_n * sum_gx[j]);
                               }
                       },
                       "batchnorm");
}

template Var<float> batchnorm(Var<float>, BatchNormState<float>&);
template Var<double> batchnorm(Var<double>, BatchNormState<double>&);

}  // namespace fog
