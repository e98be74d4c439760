#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fog/tensorcore/tape.hpp"

namespace fog {

struct GradCheckEntry {
    std::string name;
    std::size_t elements = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;

    double max_rel_error() const;
    bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// Builds the scalar loss on a fresh tape. Called once for the analytic pass
/// and twice per perturbed element.
using LossBuilder = std::function<Var<double>(Tape<double>&)>;

/// Compare reverse-mode gradients against central differences
/// (f(x+h) - f(x-h)) / 2h for every element of every listed parameter.
/// Per-element error is |a - n| / max(|a|, |n|, 1e-8).
/// Throws NonFiniteError if the loss or any gradient is NaN or infinite.
GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Parameter<double>*>& params,
                           double h = 1e-5);

}  // namespace fog
