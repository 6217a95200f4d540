#pragma once

#include "segt/model.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace segt {

struct TrainConfig {
    ModelConfig model;
    std::string train_root;
    std::string manifest;          // optional split manifest
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    int64_t batch_size = 16;
    int64_t epochs = 100;
    int64_t max_steps = 0;         // 0: run all epochs
    int64_t base_size = 352;
    std::vector<double> scales = {0.75, 1.0, 1.25};
    uint64_t seed = 0;
    double grad_clip_norm = 0.5;
};

/// One dotted config key (`section.name`) with YAML-node accessors.
struct ConfigKey {
    std::string name;
    std::string help;
    std::function<YAML::Node(const TrainConfig&)> get;
    std::function<void(TrainConfig&, const YAML::Node&)> set;
};

/// Flow-style YAML text of one key's current value.
std::string value_text(const ConfigKey& key, const TrainConfig& config);

const std::vector<ConfigKey>& config_keys();

/// Parses YAML text with nested sections, e.g. `train: {learning_rate: 1e-3}`.
/// Unknown keys are an InputError.
TrainConfig config_from_yaml(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

/// Sets one dotted key from YAML value text (`"1e-3"`, `"[1.0]"`, `"true"`).
void apply_override(TrainConfig& config, const std::string& key, const std::string& value);

/// Throws InputError if a value is out of range.
void validate(const TrainConfig& config);

/// Fully resolved config as YAML, keys in registry order.
std::string to_yaml(const TrainConfig& config);

/// FNV-1a 64-bit hash, hex encoded.
std::string config_hash(const std::string& text);

}  // namespace segt
