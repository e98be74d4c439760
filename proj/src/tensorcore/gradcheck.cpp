#include "fog/tensorcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fog {

double GradCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
    return worst;
}

namespace {

double evaluate(const LossBuilder& loss) {
    Tape<double> tape;
    const double v = loss(tape).value()[0];
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: loss is not finite");
    return v;
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Parameter<double>*>& params, double h) {
    for (Parameter<double>* p : params) p->zero_grad();
    {
        Tape<double> tape;
        Var<double> l = loss(tape);
        if (!std::isfinite(l.value()[0])) throw NonFiniteError("grad_check: loss is not finite");
        tape.backward(l);
    }
    GradCheckReport report;
    for (Parameter<double>* p : params) {
        const Tensor<double> analytic = p->grad;
        GradCheckEntry entry{p->name, p->size(), 0.0, 0.0};
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double a = analytic[i];
            if (!std::isfinite(a)) throw NonFiniteError("grad_check: gradient of " + p->name + " is not finite");
            const double saved = p->value[i];
            p->value[i] = saved + h;
            const double up = evaluate(loss);
            p->value[i] = saved - h;
            const double down = evaluate(loss);
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-8});
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
            entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
        }
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace fog
