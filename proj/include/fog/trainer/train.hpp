#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fog/netbuilder/model.hpp"
#include "fog/netbuilder/presets.hpp"
#include "fog/trainer/metrics.hpp"
#include "fog/trainer/optim.hpp"

namespace fog {

struct TrainConfig {
    double init_lr = 1e-3;
    double weight_decay = 0.0;
    std::size_t patience = 10;
    double lr_factor = 0.5;
    double min_lr = 1e-5;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 100;
    std::uint64_t seed = 0;
    bool class_weighted = false;  // inverse-frequency class weights in the cross-entropy
    bool record_time = true;      // false writes 0 seconds so histories are byte-stable
    std::vector<double> grid_lr;
    std::vector<double> grid_wd;
};

/// Throws ConfigError.
void validate(const TrainConfig& cfg);
TrainConfig train_config_from_preset(const PresetTraining& p);

nlohmann::ordered_json to_json(const TrainConfig& cfg);
/// Unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// One per epoch. `metric` is the validation metric for the task.
struct MetricsRecord {
    std::size_t epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double metric = 0;
    double lr = 0;
    double seconds = 0;
};

class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(std::size_t epoch, const std::string& what)
        : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

struct EvalResult {
    double loss = 0;
    double metric = 0;
    std::string metric_name;
    std::size_t items = 0;
};

template <typename T>
struct TrainResult {
    std::vector<MetricsRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0;
    ModelSnapshot<T> best;
    std::string stop_reason;  // "min_lr" or "max_epochs"
};

/// Labels or targets of the items a batch predicts, in batch order.
struct BatchTargets {
    std::vector<std::int32_t> labels;
    std::vector<double> values;
};
BatchTargets batch_targets(const std::vector<const Graph*>& graphs, TaskKind task);

/// Loss of one batch on `tape` (the model is used in its current BN mode).
template <typename T>
Var<T> batch_loss(Tape<T>& tape, Model<T>& model, const std::vector<const Graph*>& graphs,
                  bool class_weighted = false, Tensor<T>* out = nullptr);

/// Eval-mode loss and metric over `graphs`, accumulated across batches.
/// Throws std::invalid_argument on an empty set. Leaves the model in eval mode.
template <typename T>
EvalResult evaluate(Model<T>& model, const std::vector<Graph>& graphs, std::size_t batch_size = 128);

/// Seeded loop: shuffling, batching and updates depend only on cfg.seed.
/// The model ends holding the best-validation parameters.
template <typename T>
TrainResult<T> train(Model<T>& model, const DatasetSplit& split, const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& history);
void write_history_jsonl(const std::filesystem::path& path, const std::vector<MetricsRecord>& history);
std::string history_csv(const std::vector<MetricsRecord>& history);
std::string history_jsonl(const std::vector<MetricsRecord>& history);

}  // namespace fog
