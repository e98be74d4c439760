#pragma once

#include <filesystem>

#include "fog/netbuilder/model.hpp"

namespace fog {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON tensor dump with a config header. Values are written with round-trip
/// precision, so save/load is lossless.
template <typename T>
nlohmann::ordered_json checkpoint_to_json(Model<T>& model, const nlohmann::ordered_json& meta = {});

template <typename T>
Model<T> model_from_checkpoint(const nlohmann::json& j);

template <typename T>
void save_checkpoint(Model<T>& model, const std::filesystem::path& path, const nlohmann::ordered_json& meta = {});

template <typename T>
Model<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace fog
