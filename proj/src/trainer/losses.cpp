#include "fog/trainer/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace fog {

template <typename T>
Var<T> cross_entropy(Var<T> logits, const std::vector<std::int32_t>& labels, const std::vector<double>& class_weights) {
    Tape<T>& tape = *logits.tape();
    const Tensor<T>& x = logits.value();
    if (x.rank() != 2) throw RankError("cross_entropy: logits must be [N x classes], got " + shape_to_string(x.shape()));
    const std::size_t n = x.shape()[0];
    const std::size_t k = x.shape()[1];
    if (labels.size() != n) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                             " rows");
    }
    if (!class_weights.empty() && class_weights.size() != k) {
        throw DimensionError("cross_entropy: " + std::to_string(class_weights.size()) + " class weights for " +
                             std::to_string(k) + " classes");
    }
    // softmax probabilities are kept for the backward pass
    auto probs = std::make_shared<std::vector<double>>(n * k);
    auto weights = std::make_shared<std::vector<double>>(n, 1.0);
    double loss = 0;
    double total_w = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw IndexError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, static_cast<double>(x(i, c)));
        double z = 0;
        for (std::size_t c = 0; c < k; ++c) z += std::exp(static_cast<double>(x(i, c)) - mx);
        for (std::size_t c = 0; c < k; ++c) (*probs)[i * k + c] = std::exp(static_cast<double>(x(i, c)) - mx) / z;
        const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
        (*weights)[i] = w;
        total_w += w;
        loss += w * (std::log(z) + mx - static_cast<double>(x(i, static_cast<std::size_t>(y))));
    }
    const double denom = total_w > 0 ? total_w : 1.0;
    loss = n == 0 ? 0.0 : loss / denom;
    auto ys = std::make_shared<std::vector<std::int32_t>>(labels);
    const std::size_t ix = logits.id();
    return tape.record(
        Tensor<T>::scalar(static_cast<T>(loss)), {ix},
        [ix, probs, weights, ys, n, k, denom](Tape<T>& t, std::size_t self) {
            const double g = static_cast<double>(t.grad_of(self)[0]) / denom;
            Tensor<T>& gx = t.grad_accumulator(ix);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = (*weights)[i] * g;
                for (std::size_t c = 0; c < k; ++c) {
                    const double onehot = static_cast<std::size_t>((*ys)[i]) == c ? 1.0 : 0.0;
                    gx(i, c) += static_cast<T>(w * ((*probs)[i * k + c] - onehot));
                }
            }
        },
        "cross_entropy");
}

template <typename T>
Var<T> mae_loss(Var<T> pred, const std::vector<double>& target) {
    Tape<T>& tape = *pred.tape();
    const Tensor<T>& x = pred.value();
    if (x.size() != target.size() || (x.rank() == 2 && x.shape()[1] != 1) || x.rank() > 2) {
        throw DimensionError("mae_loss: prediction " + shape_to_string(x.shape()) + " for " +
                             std::to_string(target.size()) + " targets");
    }
    const std::size_t n = target.size();
    auto sign = std::make_shared<std::vector<double>>(n);
    double loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(x[i]) - target[i];
        loss += std::abs(d);
        (*sign)[i] = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    }
    const double denom = n == 0 ? 1.0 : static_cast<double>(n);
    const std::size_t ix = pred.id();
    return tape.record(
        Tensor<T>::scalar(static_cast<T>(loss / denom)), {ix},
        [ix, sign, denom](Tape<T>& t, std::size_t self) {
            const double g = static_cast<double>(t.grad_of(self)[0]) / denom;
            Tensor<T>& gx = t.grad_accumulator(ix);
            for (std::size_t i = 0; i < sign->size(); ++i) gx[i] += static_cast<T>(g * (*sign)[i]);
        },
        "mae");
}

std::vector<double> inverse_frequency_weights(const std::vector<std::int32_t>& labels, std::size_t classes) {
    std::vector<double> counts(classes, 0.0);
    for (std::int32_t y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) throw IndexError("label outside the class range");
        counts[static_cast<std::size_t>(y)] += 1;
    }
    const double n = static_cast<double>(labels.size());
    std::vector<double> w(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c)
        if (counts[c] > 0) w[c] = (n - counts[c]) / n;
    return w;
}

template Var<float> cross_entropy(Var<float>, const std::vector<std::int32_t>&, const std::vector<double>&);
template Var<double> cross_entropy(Var<double>, const std::vector<std::int32_t>&, const std::vector<double>&);
template Var<float> mae_loss(Var<float>, const std::vector<double>&);
template Var<double> mae_loss(Var<double>, const std::vector<double>&);

}  // namespace fog
