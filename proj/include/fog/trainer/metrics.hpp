#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fog/graphstore/dataset.hpp"
#include "fog/tensorcore/tensor.hpp"

namespace fog {

/// Fraction of equal entries. Throws DimensionError on a size mismatch and
/// std::invalid_argument on empty input.
double accuracy(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels);

/// F1 of the positive class (label 1). Defined as 0 when there are no
/// predicted and no actual positives.
double f1_positive(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels);

double mean_absolute_error(const std::vector<double>& preds, const std::vector<double>& targets);

/// Row-wise argmax; ties go to the lowest index.
template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T>& logits);

/// "accuracy", "mae" or "f1".
std::string metric_name(TaskKind task);

/// True when a larger metric value is better.
bool metric_higher_is_better(TaskKind task);

/// Accumulates counts over batches so the final metric does not depend on
/// how the items were split.
class MetricAccumulator {
public:
    explicit MetricAccumulator(TaskKind task) : task_(task) {}

    void add_classes(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels);
    void add_regression(const std::vector<double>& preds, const std::vector<double>& targets);

    std::size_t items() const noexcept { return items_; }
    double value() const;

private:
    TaskKind task_;
    std::size_t items_ = 0;
    std::size_t correct_ = 0;
    std::size_t tp_ = 0, fp_ = 0, fn_ = 0;
    double abs_error_ = 0;
};

}  // namespace fog
