#include "fog/trainer/optim.hpp"

#include <cmath>

#include "fog/netbuilder/config.hpp"

namespace fog {

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (Parameter<T>* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
        p->zero_grad();
    }
}

template <typename T>
void Adam<T>::zero_grad() {
    for (Parameter<T>* p : params_) p->zero_grad();
}

template <typename T>
void Adam<T>::step(double lr, double weight_decay) {
    for (Parameter<T>* p : params_) {
        for (T g : p->grad.data()) {
            if (!std::isfinite(static_cast<double>(g))) throw NonFiniteError("non-finite gradient in " + p->name);
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter<T>& p = *params_[i];
        Tensor<double>& m = m_[i];
        Tensor<double>& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            double g = static_cast<double>(p.grad[k]);
            if (weight_decay != 0.0) g += weight_decay * static_cast<double>(p.value[k]);
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
            const double update = lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
            p.value[k] = static_cast<T>(static_cast<double>(p.value[k]) - update);
        }
    }
}

void validate(const PlateauConfig& cfg) {
    if (!(cfg.factor > 0.0 && cfg.factor < 1.0)) throw ConfigError("lr_factor must lie in (0, 1)");
    if (!(cfg.min_lr > 0.0)) throw ConfigError("min_lr must be positive");
    if (cfg.patience == 0) throw ConfigError("patience must be at least 1");
}

PlateauResult plateau_step(SchedulerState& s, const PlateauConfig& cfg, double val_loss) {
    bool reduced = false;
    if (val_loss < s.best) {
        s.best = val_loss;
        s.since_improvement = 0;
    } else if (++s.since_improvement >= cfg.patience) {
        s.lr *= cfg.factor;
        s.since_improvement = 0;
        reduced = true;
    }
    return {s.lr, reduced, s.lr < cfg.min_lr};
}

template class Adam<float>;
template class Adam<double>;

}  // namespace fog
