#pragma once

#include <cstdint>
#include <vector>

#include "fog/tensorcore/tape.hpp"

namespace fog {

/// Mean over rows of -log softmax(logits)[label]. With class weights the mean
/// is weighted: sum_i w[y_i] nll_i / sum_i w[y_i]. Throws IndexError on a
/// label outside [0, classes).
template <typename T>
Var<T> cross_entropy(Var<T> logits, const std::vector<std::int32_t>& labels,
                     const std::vector<double>& class_weights = {});

/// Mean |pred - target| over a [N x 1] or [N] prediction. The subgradient at
/// pred == target is 0.
template <typename T>
Var<T> mae_loss(Var<T> pred, const std::vector<double>& target);

/// Weights (N - n_c) / N for classes present in `labels`, 0 for absent ones.
std::vector<double> inverse_frequency_weights(const std::vector<std::int32_t>& labels, std::size_t classes);

}  // namespace fog
