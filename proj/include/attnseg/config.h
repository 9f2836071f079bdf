#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "attnseg/losses.h"
#include "attnseg/model.h"
#include "attnseg/training.h"

namespace attnseg {

struct DataConfig {
  // Directory holding manifest.json and the per-patient volume directories.
  std::string dataset;
  int folds = 5;
  // Test fold index of this run; validation is fold (fold + 1) % folds.
  int fold = 0;
  std::uint64_t split_seed = 0;

  bool operator==(const DataConfig&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  DataConfig data;
};

// Small-CPU defaults: desk model, physical batch 2 without accumulation.
ExperimentConfig default_experiment_config();

nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const LossConfig& c);
nlohmann::json to_json(const DataConfig& c);
nlohmann::json to_json(const ExperimentConfig& c);

// Fields absent from `j` keep the values already in `c`. Unknown keys and
// wrongly typed values raise ConfigError naming the field ("model.levels").
void apply_json(ModelConfig& c, const nlohmann::json& j);
void apply_json(TrainConfig& c, const nlohmann::json& j);
void apply_json(LossConfig& c, const nlohmann::json& j);
void apply_json(DataConfig& c, const nlohmann::json& j);
void apply_json(ExperimentConfig& c, const nlohmann::json& j);

ModelConfig model_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
void validate(const ExperimentConfig& c);

// Dotted names of the fields whose values differ.
std::vector<std::string> diff_fields(const nlohmann::json& a, const nlohmann::json& b,
                                     const std::string& prefix = "");

// Concatenated component tags, e.g. "AGUNet-MS-DS-AG-Top-FTL".
std::string experiment_name(const ExperimentConfig& c);

}  // namespace attnseg
