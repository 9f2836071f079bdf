#include <gtest/gtest.h>

#include <filesystem>

#include "attnseg/commands.h"
#include "attnseg/error.h"

using namespace attnseg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "attnseg_test_commands" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir.string();
}

CohortSpec tiny_cohort(int count, std::uint64_t seed) {
  CohortSpec c;
  c.count = count;
  c.seed = seed;
  c.min_volume_ml = 0.5;
  c.max_volume_ml = 4.0;
  c.base.dims = {20, 28, 28};
  c.base.spacing = {2.0, 2.0, 2.0};
  c.base.head_semi_axes = {22.0, 22.0, 15.0};
  c.base.vessel_count = 1;
  return c;
}

ExperimentConfig tiny_experiment(const std::string& dataset) {
  ExperimentConfig c = default_experiment_config();
  c.model.levels = 2;
  c.model.filters = {2, 4};
  c.model.input_shape = {16, 16, 16};
  c.train.max_epochs = 2;
  c.train.patience_epochs = 2;
  c.train.seed = 3;
  c.data.dataset = dataset;
  c.data.folds = 3;
  return c;
}

// Shared by the pipeline tests; generated once.
const std::string& dataset() {
  static const std::string dir = [] {
    const std::string d = scratch("dataset");
    cmd_phantom(d, tiny_cohort(6, 7));
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Phantom, EmptyCohortWritesEmptyManifest) {
  const std::string d = scratch("empty");
  EXPECT_TRUE(cmd_phantom(d, tiny_cohort(0, 1)).empty());
  EXPECT_TRUE(read_manifest(d).empty());
}

TEST(Phantom, SameSeedIsByteIdentical) {
  const std::string a = scratch("seed_a"), b = scratch("seed_b");
  const auto ea = cmd_phantom(a, tiny_cohort(3, 7));
  cmd_phantom(b, tiny_cohort(3, 7));
  ASSERT_EQ(ea.size(), 3u);
  EXPECT_EQ(read_text(a + "/manifest.json"), read_text(b + "/manifest.json"));
  for (const auto& e : ea) {
    for (const char* f : {"meta.json", "image.raw", "label.raw"}) {
      EXPECT_EQ(read_text(a + "/" + e.path + "/" + f), read_text(b + "/" + e.path + "/" + f)) << e.id << f;
    }
  }
  const std::string c = scratch("seed_c");
  cmd_phantom(c, tiny_cohort(3, 8));
  EXPECT_NE(read_text(a + "/" + ea[0].path + "/image.raw"), read_text(c + "/" + ea[0].path + "/image.raw"));
}

TEST(Phantom, CohortSpecFileRejectsUnknownFields) {
  const std::string d = scratch("cohort_spec");
  fs::create_directories(d);
  write_text(d + "/ok.json", R"({"count": 4, "seed": 2, "phantom": {"dims": [20, 28, 28], "noise_sigma": 0.01}})");
  const CohortSpec c = load_cohort_spec(d + "/ok.json");
  EXPECT_EQ(c.count, 4);
  EXPECT_EQ(c.base.dims, (Dims{20, 28, 28}));
  EXPECT_DOUBLE_EQ(c.base.noise_sigma, 0.01);
  write_text(d + "/bad.json", R"({"phantom": {"tumours": 2}})");
  EXPECT_THROW(load_cohort_spec(d + "/bad.json"), ConfigError);
}

TEST(Pipeline, TrainInferEvaluate) {
  const ExperimentConfig cfg = tiny_experiment(dataset());
  const std::string run = scratch("run");
  const TrainOutputs t = cmd_train(cfg, run);
  EXPECT_EQ(t.history.epochs.size(), 2u);
  for (const char* f : {"checkpoint.bin", "history.csv", "config.json", "run_manifest.json"}) {
    EXPECT_TRUE(fs::exists(run + "/" + f)) << f;
  }
  const json manifest = json::parse(read_text(run + "/run_manifest.json"));
  EXPECT_EQ(manifest.at("parameter_count"), t.parameter_count);
  EXPECT_EQ(manifest.at("experiment"), "UNet-FV");
  EXPECT_EQ(manifest.at("test_ids").size(), 2u);

  const auto entries = read_manifest(dataset());
  std::vector<std::string> dirs;
  for (const auto& e : entries) dirs.push_back(dataset() + "/" + e.path);
  const std::string pred = scratch("pred"), pred2 = scratch("pred2");
  const auto timing = cmd_infer(t.checkpoint, dirs, pred, 2);
  cmd_infer(t.checkpoint, dirs, pred2, 1);
  ASSERT_EQ(timing.size(), entries.size());
  for (const auto& tm : timing) {
    EXPECT_GT(tm.preprocess.mean, 0);
    EXPECT_GT(tm.forward.mean, 0);
    EXPECT_GT(tm.reconstruct.mean, 0);
    EXPECT_GE(tm.total.mean, tm.forward.mean);
  }
  EXPECT_TRUE(json::parse(read_text(pred + "/timing.json")).contains("model_load_seconds"));
  for (const auto& e : entries) {
    const Volume in = read_volume(dataset() + "/" + e.path), out = read_volume(pred + "/" + e.id);
    EXPECT_EQ(out.dims, in.dims);
    EXPECT_EQ(out.spacing, in.spacing);
    for (float p : out.data) ASSERT_TRUE(p >= 0.0f && p <= 1.0f);
    EXPECT_EQ(read_text(pred + "/" + e.id + "/image.raw"), read_text(pred2 + "/" + e.id + "/image.raw"));
  }

  const std::string ev = scratch("eval"), ev2 = scratch("eval2");
  const auto r = cmd_evaluate(pred, dataset(), cfg.data, ev);
  cmd_evaluate(pred, dataset(), cfg.data, ev2);
  EXPECT_EQ(r.per_fold.size(), 3u);
  EXPECT_EQ(r.volumes.size(), entries.size());
  for (const char* f : {"metrics.csv", "pooled.json", "table.txt", "bins.csv"}) {
    EXPECT_EQ(read_text(ev + "/" + f), read_text(ev2 + "/" + f)) << f;
  }
  EXPECT_EQ(read_text(ev + "/table.txt").substr(0, 46), "PT | Dice | Dice-TP | F1 | Recall | Precision\n");
}

TEST(Pipeline, TrainingIsDeterministic) {
  const ExperimentConfig cfg = tiny_experiment(dataset());
  const std::string a = scratch("det_a"), b = scratch("det_b");
  const auto ta = cmd_train(cfg, a), tb = cmd_train(cfg, b);
  EXPECT_EQ(ta.history.to_csv(false), tb.history.to_csv(false));
  EXPECT_EQ(read_text(a + "/checkpoint.bin"), read_text(b + "/checkpoint.bin"));
}

TEST(Evaluate, PerfectPredictionsScoreOne) {
  const auto entries = read_manifest(dataset());
  const std::string pred = scratch("perfect");
  for (const auto& e : entries) {
    Volume v = read_volume(dataset() + "/" + e.path);
    v.data.assign(v.label.begin(), v.label.end());
    v.label.clear();
    write_volume(pred + "/" + e.id, v);
  }
  DataConfig data;
  data.folds = 3;
  const auto r = cmd_evaluate(pred, dataset(), data, scratch("perfect_eval"));
  const PooledRow& best = r.report.best_row();
  EXPECT_DOUBLE_EQ(best.dice.mean, 1.0);
  EXPECT_DOUBLE_EQ(best.dice_tp.mean, 1.0);
  EXPECT_DOUBLE_EQ(best.f1.mean, 1.0);
  EXPECT_DOUBLE_EQ(best.recall.mean, 1.0);
  EXPECT_DOUBLE_EQ(best.precision.mean, 1.0);
  EXPECT_DOUBLE_EQ(best.dice.std, 0.0);
  EXPECT_EQ(r.bins.size(), entries.size());
}

TEST(Evaluate, MissingPredictionsListIds) {
  const auto entries = read_manifest(dataset());
  const std::string pred = scratch("partial");
  Volume v = read_volume(dataset() + "/" + entries[0].path);
  v.label.clear();
  write_volume(pred + "/" + entries[0].id, v);
  DataConfig data;
  data.folds = 3;
  try {
    cmd_evaluate(pred, dataset(), data, scratch("partial_eval"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.find(entries[0].id + " "), std::string::npos);
    for (std::size_t i = 1; i < entries.size(); ++i) EXPECT_NE(msg.find(entries[i].id), std::string::npos) << msg;
  }
}

TEST(Ablate, GridRowsShareSeedsAndGrowInParameters) {
  ExperimentConfig cfg = tiny_experiment(dataset());
  cfg.train.max_epochs = 1;
  const std::string out = scratch("ablate");
  const auto rows = cmd_ablate(cfg, {"UNet-FV", "AGUNet-DS", "DAGUNet-MS-DS"}, out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[0].parameter_count, rows[1].parameter_count);
  EXPECT_LT(rows[1].parameter_count, rows[2].parameter_count);
  const std::string table = read_text(out + "/ablation.txt");
  EXPECT_EQ(table.rfind("shared seed 3, split seed 0, 3 folds\n", 0), 0u) << table;
  EXPECT_NE(table.find("Experiment | # params | PT | Dice | Dice-TP | F1 | Recall | Precision"), std::string::npos);
  for (const auto& r : rows) {
    EXPECT_NE(table.find(r.name + " | " + std::to_string(r.parameter_count)), std::string::npos);
    EXPECT_TRUE(fs::exists(out + "/" + r.name + "/evaluation/pooled.json"));
  }
  EXPECT_THROW(cmd_ablate(cfg, {}, out), ConfigError);
}

TEST(Train, RequiresDataset) {
  ExperimentConfig cfg = tiny_experiment("");
  EXPECT_THROW(cmd_train(cfg, scratch("nodata")), ConfigError);
}
