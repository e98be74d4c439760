#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fog/graphstore.hpp"
#include "fog/netbuilder.hpp"
#include "fog/trainer.hpp"

namespace fog::cli {

/// Either a generator with its parameters or a dataset file.
struct DataSpec {
    std::string generator;
    std::filesystem::path path;
    std::optional<std::uint64_t> seed;  // unset: follow the run seed
    nlohmann::json params = nlohmann::json::object();
};

/// Schema:
///   model:      preset name or inline model object
///   train:      train object (keys override preset defaults)
///   data:       {generator, seed?, <generator params>} or {path}
///   seed:       run seed for initialisation and shuffling
///   output_dir: run directory
struct RunConfig {
    std::string preset;  // empty for inline models
    ModelConfig model;
    TrainConfig train;
    DataSpec data;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs/default";
};

/// Validates the whole file before returning; throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Set the run seed everywhere it is consumed.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

std::vector<std::string> generator_names();
/// Throws ConfigError for unknown generators or parameters.
DatasetSplit generate(const std::string& generator, const nlohmann::json& params, std::uint64_t seed);
/// Key and type check only; value ranges are checked by the generator.
void check_generator_params(const std::string& generator, const nlohmann::json& params);
DatasetSplit make_dataset(const DataSpec& spec, std::uint64_t run_seed);

}  // namespace fog::cli
