#include <gtest/gtest.h>

#include <filesystem>

#include "attnseg/commands.h"
#include "attnseg/config.h"
#include "attnseg/error.h"

using namespace attnseg;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    ExperimentConfig c = default_experiment_config();
    apply_json(c, j);
    validate(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
  const ExperimentConfig c = default_experiment_config();
  EXPECT_EQ(c.model, desk_model_config());
  EXPECT_EQ(c.train.accumulation_steps, 1);
  ExperimentConfig d;
  apply_json(d, to_json(c));
  EXPECT_EQ(d.model, c.model);
  EXPECT_EQ(d.train, c.train);
  EXPECT_EQ(d.loss, c.loss);
  EXPECT_EQ(d.data, c.data);
  EXPECT_TRUE(diff_fields(to_json(c), to_json(d)).empty());
}

TEST(Config, PartialOverridesKeepDefaults) {
  ExperimentConfig c = default_experiment_config();
  apply_json(c, json::parse(R"({"model": {"attention": "gated", "deep_supervision": true}, "train": {"seed": 5}})"));
  EXPECT_EQ(c.model.attention, Attention::gated);
  EXPECT_TRUE(c.model.deep_supervision);
  EXPECT_EQ(c.model.levels, 3);
  EXPECT_EQ(c.train.seed, 5u);
  EXPECT_EQ(c.train.lr, 1e-3);
}

TEST(Config, FieldLevelErrors) {
  EXPECT_EQ(error_of(json::parse(R"({"model": {"levels": "three"}})")), "model.levels: expected an integer");
  EXPECT_EQ(error_of(json::parse(R"({"train": {"lr": "fast"}})")), "train.lr: expected a number");
  EXPECT_EQ(error_of(json::parse(R"({"model": {"depth": 3}})")), "model.depth: unknown field");
  EXPECT_NE(error_of(json::parse(R"({"model": {"attention": "self"}})")).find("model.attention"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"optimizer": {}})")).find("unknown section"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"data": {"fold": 7}})")).find("data.fold"), std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"model": {"input_shape": [30, 32, 32]}})")).find("model.input_shape"),
            std::string::npos);
  EXPECT_NE(error_of(json::parse(R"({"loss": {"tversky_alpha": 0.9}})")).find("loss.tversky"), std::string::npos);
}

TEST(Config, LoadFromFileAndReportParseErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "attnseg_test_config";
  std::filesystem::create_directories(dir);
  write_text((dir / "ok.json").string(), R"({"model": {"levels": 2, "filters": [4, 8]}})");
  EXPECT_EQ(load_experiment_config((dir / "ok.json").string()).model.levels, 2);
  write_text((dir / "bad.json").string(), "{not json");
  EXPECT_THROW(load_experiment_config((dir / "bad.json").string()), ConfigError);
}

TEST(Config, DiffFieldsNamesDottedPaths) {
  json a = to_json(desk_model_config()), b = a;
  b["levels"] = 4;
  b["filters"] = {1, 2, 3, 4};
  const auto d = diff_fields(a, b);
  EXPECT_EQ(d, (std::vector<std::string>{"filters", "levels"}));
}

TEST(Naming, ConcatenatedAbbreviations) {
  ExperimentConfig c = default_experiment_config();
  EXPECT_EQ(experiment_name(c), "UNet-FV");
  c.model.attention = Attention::gated;
  c.model.multiscale_input = c.model.deep_supervision = true;
  EXPECT_EQ(experiment_name(c), "AGUNet-MS-DS");
  c.train.accumulation_steps = 4;
  c.train.checkpoint_policy = CheckpointPolicy::top_level_loss;
  c.loss.kind = LossKind::focal_tversky;
  EXPECT_EQ(experiment_name(c), "AGUNet-MS-DS-AG-Top-FTL");
}

TEST(Naming, ApplyNameInvertsNaming) {
  const ExperimentConfig base = default_experiment_config();
  for (const std::string name : {"UNet-FV", "AGUNet-DS", "AGUNet-MS-DS", "DAUNet-MS-DS", "DAGUNet-MS-DS",
                                 "AGUNet-MS-DS-AG", "AGUNet-MS-DS-Top", "DAGUNet-MS-DS-AG-Top-FTL", "UNet-FV-AG"}) {
    const ExperimentConfig c = apply_experiment_name(name, base);
    EXPECT_EQ(experiment_name(c), name);
  }
  const auto ag = apply_experiment_name("AGUNet-MS-DS", base);
  EXPECT_EQ(ag.model.attention, Attention::gated);
  EXPECT_TRUE(ag.model.multiscale_input);
  EXPECT_TRUE(ag.model.deep_supervision);
  EXPECT_EQ(apply_experiment_name("AGUNet-AG", base).train.accumulation_steps, 4);
  EXPECT_EQ(apply_experiment_name("AGUNet-TFL", base).loss.kind, LossKind::focal_tversky);
  EXPECT_THROW(apply_experiment_name("ResUNet", base), ConfigError);
  EXPECT_THROW(apply_experiment_name("AGUNet-XX", base), ConfigError);
}
