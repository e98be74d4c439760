#pragma once

#include <string>

#include "fog/tensorcore/tape.hpp"

namespace fog {

enum class BnMode { train, eval, identity };

/// Per-channel batch normalization over the rows of an [N x C] tensor.
template <typename T>
struct BatchNormState {
    Parameter<T> gamma;
    Parameter<T> beta;
    Tensor<T> running_mean;
    Tensor<T> running_var;
    double eps = 1e-5;
    double momentum = 0.1;
    BnMode mode = BnMode::train;

    BatchNormState() = default;
    BatchNormState(const std::string& name, std::size_t channels)
        : gamma(name + ".gamma", Tensor<T>({channels}, T{1})),
          beta(name + ".beta", Tensor<T>({channels}, T{0})),
          running_mean({channels}, T{0}),
          running_var({channels}, T{1}) {}

    std::size_t channels() const noexcept { return gamma.value.size(); }
};

/// Train mode normalizes with the biased batch variance and folds the batch
/// statistics into the running estimates (the running variance uses the
/// unbiased estimate). Eval mode uses the running estimates. Identity mode
/// returns `x` itself.
template <typename T>
Var<T> batchnorm(Var<T> x, BatchNormState<T>& state);

}  // namespace fog
