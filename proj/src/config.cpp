#include "attnseg/config.h"

#include <fstream>
#include <set>

#include "attnseg/error.h"

namespace attnseg {

using nlohmann::json;

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.train.physical_batch = 2;
  c.train.accumulation_steps = 1;
  return c;
}

json to_json(const ModelConfig& c) {
  return {{"backbone", c.backbone},
          {"levels", c.levels},
          {"filters", c.filters},
          {"attention", to_string(c.attention)},
          {"multiscale_input", c.multiscale_input},
          {"deep_supervision", c.deep_supervision},
          {"classes", c.classes},
          {"in_channels", c.in_channels},
          {"input_shape", c.input_shape},
          {"convs_per_block", c.convs_per_block},
          {"normalization", to_string(c.normalization)},
          {"dropout_rate", c.dropout_rate}};
}

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"physical_batch", c.physical_batch},
          {"accumulation_steps", c.accumulation_steps},
          {"patience_epochs", c.patience_epochs},
          {"max_epochs", c.max_epochs},
          {"checkpoint_policy", to_string(c.checkpoint_policy)},
          {"seed", c.seed},
          {"augment", c.augment}};
}

json to_json(const LossConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"tversky_alpha", c.tversky_alpha},
          {"tversky_beta", c.tversky_beta},
          {"focal_gamma", c.focal_gamma},
          {"ds_weights", c.ds_weights},
          {"epsilon", c.epsilon}};
}

json to_json(const DataConfig& c) {
  return {{"dataset", c.dataset}, {"folds", c.folds}, {"fold", c.fold}, {"split_seed", c.split_seed}};
}

json to_json(const ExperimentConfig& c) {
  return {{"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"loss", to_json(c.loss)},
          {"data", to_json(c.data)}};
}

namespace {

// Reads the keys of one section with per-field type errors.
class Reader {
 public:
  Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j.is_object()) throw ConfigError(section_ + ": expected an object");
  }
  // Rejects keys that no get() asked for.
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(section_ + "." + key + ": unknown field");
    }
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    const std::string name = section_ + "." + key;
    if constexpr (std::is_same_v<V, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + ": expected a boolean");
    } else if constexpr (std::is_integral_v<V>) {
      if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
      if (std::is_unsigned_v<V> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        throw ConfigError(name + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<V>) {
      if (!v.is_number()) throw ConfigError(name + ": expected a number");
    } else if constexpr (std::is_same_v<V, std::string>) {
      if (!v.is_string()) throw ConfigError(name + ": expected a string");
    } else {
      if (!v.is_array()) throw ConfigError(name + ": expected an array of integers");
      for (const auto& e : v) {
        if (!e.is_number_integer()) throw ConfigError(name + ": expected an array of integers");
      }
    }
    out = v.get<V>();
  }

  std::string text(const char* key, const std::string& current) {
    std::string s = current;
    get(key, s);
    return s;
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace

void apply_json(ModelConfig& c, const json& j) {
  Reader r(j, "model");
  r.get("backbone", c.backbone);
  r.get("levels", c.levels);
  r.get("filters", c.filters);
  c.attention = parse_attention(r.text("attention", to_string(c.attention)));
  r.get("multiscale_input", c.multiscale_input);
  r.get("deep_supervision", c.deep_supervision);
  r.get("classes", c.classes);
  r.get("in_channels", c.in_channels);
  r.get("input_shape", c.input_shape);
  r.get("convs_per_block", c.convs_per_block);
  c.normalization = parse_normalization(r.text("normalization", to_string(c.normalization)));
  r.get("dropout_rate", c.dropout_rate);
  r.finish();
}

void apply_json(TrainConfig& c, const json& j) {
  Reader r(j, "train");
  r.get("lr", c.lr);
  r.get("physical_batch", c.physical_batch);
  r.get("accumulation_steps", c.accumulation_steps);
  r.get("patience_epochs", c.patience_epochs);
  r.get("max_epochs", c.max_epochs);
  c.checkpoint_policy = parse_checkpoint_policy(r.text("checkpoint_policy", to_string(c.checkpoint_policy)));
  r.get("seed", c.seed);
  r.get("augment", c.augment);
  r.finish();
}

void apply_json(LossConfig& c, const json& j) {
  Reader r(j, "loss");
  c.kind = parse_loss_kind(r.text("kind", to_string(c.kind)));
  r.get("tversky_alpha", c.tversky_alpha);
  r.get("tversky_beta", c.tversky_beta);
  r.get("focal_gamma", c.focal_gamma);
  r.get("ds_weights", c.ds_weights);
  r.get("epsilon", c.epsilon);
  r.finish();
}

void apply_json(DataConfig& c, const json& j) {
  Reader r(j, "data");
  r.get("dataset", c.dataset);
  r.get("folds", c.folds);
  r.get("fold", c.fold);
  r.get("split_seed", c.split_seed);
  r.finish();
}

void apply_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected an object at the top level");
  for (const auto& [key, value] : j.items()) {
    if (key == "model") apply_json(c.model, value);
    else if (key == "train") apply_json(c.train, value);
    else if (key == "loss") apply_json(c.loss, value);
    else if (key == "data") apply_json(c.data, value);
    else throw ConfigError(key + ": unknown section (expected model, train, loss, data)");
  }
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  apply_json(c, j);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  ExperimentConfig c = default_experiment_config();
  apply_json(c, j);
  return c;
}

void validate(const ExperimentConfig& c) {
  validate(c.model);
  validate(c.train);
  validate(c.loss);
  if (c.data.folds < 1) throw ConfigError("data.folds must be >= 1");
  if (c.data.fold < 0 || c.data.fold >= c.data.folds) {
    throw ConfigError("data.fold must lie in [0, data.folds)");
  }
}

std::vector<std::string> diff_fields(const json& a, const json& b, const std::string& prefix) {
  std::vector<std::string> out;
  if (a.is_object() && b.is_object()) {
    std::set<std::string> keys;
    for (const auto& [k, _] : a.items()) keys.insert(k);
    for (const auto& [k, _] : b.items()) keys.insert(k);
    for (const auto& k : keys) {
      const std::string name = prefix.empty() ? k : prefix + "." + k;
      if (!a.contains(k) || !b.contains(k)) {
        out.push_back(name);
        continue;
      }
      auto sub = diff_fields(a.at(k), b.at(k), name);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else if (a != b) {
    out.push_back(prefix);
  }
  return out;
}

std::string experiment_name(const ExperimentConfig& c) {
  std::string name = architecture_name(c.model);
  if (c.train.accumulation_steps > 1) name += "-AG";
  if (c.train.checkpoint_policy == CheckpointPolicy::top_level_loss) name += "-Top";
  if (c.loss.kind == LossKind::focal_tversky) name += "-FTL";
  return name;
}

}  // namespace attnseg
