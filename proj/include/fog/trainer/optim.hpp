#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "fog/tensorcore/tape.hpp"

namespace fog {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam with weight decay added to the gradient (L2 coupling).
/// Moments are kept in double whatever the parameter precision.
template <typename T>
class Adam {
public:
    explicit Adam(std::vector<Parameter<T>*> params, AdamConfig cfg = {});

    /// One update from the current Parameter::grad values. Throws
    /// NonFiniteError naming the parameter if any gradient is NaN or infinite;
    /// no parameter is modified in that case.
    void step(double lr, double weight_decay = 0.0);

    void zero_grad();

    std::size_t steps() const noexcept { return t_; }
    const std::vector<Tensor<double>>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor<double>>& second_moments() const noexcept { return v_; }

private:
    std::vector<Parameter<T>*> params_;
    AdamConfig cfg_;
    std::vector<Tensor<double>> m_;
    std::vector<Tensor<double>> v_;
    std::size_t t_ = 0;
};

struct PlateauConfig {
    double factor = 0.5;
    std::size_t patience = 10;
    double min_lr = 1e-5;
};

struct SchedulerState {
    double lr = 1e-3;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_improvement = 0;
};

struct PlateauResult {
    double lr;
    bool reduced;
    bool stop;
};

/// A loss strictly below the best so far resets the counter. When the counter
/// reaches `patience` the rate is multiplied by `factor` and the counter
/// restarts. `stop` is set once the rate is below `min_lr`.
PlateauResult plateau_step(SchedulerState& state, const PlateauConfig& cfg, double val_loss);

void validate(const PlateauConfig& cfg);

}  // namespace fog
