#include "fog/trainer/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fog {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) +
                             " labels");
    }
    if (a == 0) throw std::invalid_argument(std::string(what) + ": no items");
}

}  // namespace

double accuracy(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels) {
    check_sizes(preds.size(), labels.size(), "accuracy");
    MetricAccumulator acc(TaskKind::node_class);
    acc.add_classes(preds, labels);
    return acc.value();
}

double f1_positive(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels) {
    check_sizes(preds.size(), labels.size(), "f1_positive");
    MetricAccumulator acc(TaskKind::edge_class);
    acc.add_classes(preds, labels);
    return acc.value();
}

double mean_absolute_error(const std::vector<double>& preds, const std::vector<double>& targets) {
    check_sizes(preds.size(), targets.size(), "mean_absolute_error");
    MetricAccumulator acc(TaskKind::graph_regress);
    acc.add_regression(preds, targets);
    return acc.value();
}

template <typename T>
std::vector<std::int32_t> argmax_rows(const Tensor<T>& logits) {
    std::vector<std::int32_t> out(logits.rows());
    const std::size_t k = logits.row_width();
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (logits[i * k + c] > logits[i * k + best]) best = c;
        out[i] = static_cast<std::int32_t>(best);
    }
    return out;
}

std::string metric_name(TaskKind task) {
    switch (task) {
        case TaskKind::graph_regress: return "mae";
        case TaskKind::edge_class: return "f1";
        default: return "accuracy";
    }
}

bool metric_higher_is_better(TaskKind task) { return task != TaskKind::graph_regress; }

void MetricAccumulator::add_classes(const std::vector<std::int32_t>& preds, const std::vector<std::int32_t>& labels) {
    if (preds.size() != labels.size()) {
        throw DimensionError("metric: " + std::to_string(preds.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        correct_ += preds[i] == labels[i];
        tp_ += preds[i] == 1 && labels[i] == 1;
        fp_ += preds[i] == 1 && labels[i] != 1;
        fn_ += preds[i] != 1 && labels[i] == 1;
    }
    items_ += preds.size();
}

void MetricAccumulator::add_regression(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.size() != targets.size()) {
        throw DimensionError("metric: " + std::to_string(preds.size()) + " predictions for " +
                             std::to_string(targets.size()) + " targets");
    }
    for (std::size_t i = 0; i < preds.size(); ++i) abs_error_ += std::abs(preds[i] - targets[i]);
    items_ += preds.size();
}

double MetricAccumulator::value() const {
    if (items_ == 0) return 0.0;
    switch (task_) {
        case TaskKind::graph_regress: return abs_error_ / static_cast<double>(items_);
        case TaskKind::edge_class: {
            const double denom = 2.0 * static_cast<double>(tp_) + static_cast<double>(fp_ + fn_);
            return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp_) / denom;
        }
        default: return static_cast<double>(correct_) / static_cast<double>(items_);
    }
}

template std::vector<std::int32_t> argmax_rows(const Tensor<float>&);
template std::vector<std::int32_t> argmax_rows(const Tensor<double>&);

}  // namespace fog
