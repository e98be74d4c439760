#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fog/netbuilder/config.hpp"

namespace fog {

struct PresetTraining {
    double init_lr = 1e-3;
    double weight_decay = 0.0;
    std::size_t patience = 10;
    double lr_factor = 0.5;
    double min_lr = 1e-5;
    std::size_t batch_size = 128;
};

struct Preset {
    std::string name;       // "<dataset>/<family>", e.g. "pattern/gcn+fog"
    std::string dataset;    // pattern | cluster | zinc | zinc-nofeat | tsp
    std::string generator;  // matching desk-scale generator
    ModelConfig model;
    PresetTraining training;
    std::size_t target_params = 0;  // reference parameter count
};

const std::vector<Preset>& presets();
std::vector<std::string> preset_names();

/// Throws ConfigError listing the known names.
const Preset& find_preset(const std::string& name);

}  // namespace fog
