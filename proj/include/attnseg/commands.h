#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnseg/config.h"
#include "attnseg/folds.h"
#include "attnseg/phantom.h"
#include "attnseg/report.h"
#include "attnseg/volume_io.h"

namespace attnseg {

// Writes <out>/<id>/ volume directories plus <out>/manifest.json.
std::vector<ManifestEntry> cmd_phantom(const std::string& out_dir, const CohortSpec& cohort);
// Optional JSON fields: count, min_volume_ml, max_volume_ml, seed, and a
// "phantom" object overriding PhantomSpec fields.
CohortSpec load_cohort_spec(const std::string& path);

FoldSplit dataset_split(const std::string& dataset_dir, const DataConfig& data);

struct TrainOutputs {
  TrainingHistory history;
  std::int64_t parameter_count = 0;
  std::string checkpoint;
  nlohmann::json manifest;
};

// Trains fold data.fold of the dataset and writes checkpoint.bin,
// history.csv, config.json and run_manifest.json into out_dir.
TrainOutputs cmd_train(const ExperimentConfig& config, const std::string& out_dir, std::ostream* log = nullptr);

struct PhaseTiming {
  double mean = 0, std = 0;
};

struct InferTiming {
  std::string id;
  PhaseTiming preprocess, forward, reconstruct, total;
};

// Writes one probability volume per input into <out>/<id>/ and
// <out>/timing.json. Each volume is processed `repeat` times; outputs of the
// repeats must agree bit for bit.
std::vector<InferTiming> cmd_infer(const std::string& checkpoint, const std::vector<std::string>& volume_dirs,
                                   const std::string& out_dir, int repeat = 1);

struct EvaluationOutputs {
  std::vector<std::vector<PatientMetrics>> per_fold;
  PooledReport report;
  std::vector<VolumeBin> bins;
  // Cohort order of the manifest.
  std::vector<PatientVolume> volumes;
};

// Scores <pred_dir>/<id> against the dataset annotations for every test
// patient of every fold; writes metrics.csv, pooled.json, table.txt and
// bins.csv into out_dir. Missing predictions raise ConfigError listing ids.
EvaluationOutputs cmd_evaluate(const std::string& pred_dir, const std::string& dataset_dir, const DataConfig& data,
                               const std::string& out_dir);

struct CrossValidationOutputs {
  std::vector<TrainOutputs> folds;
  EvaluationOutputs evaluation;
};

// Train, infer and evaluate every fold of config.data.
CrossValidationOutputs cmd_crossval(const ExperimentConfig& config, const std::string& out_dir,
                                    std::ostream* log = nullptr);

// Applies experiment tags ("AGUNet-MS-DS-AG-Top-FTL") to a base config.
// AG uses base.train.accumulation_steps when it is > 1, else 4.
ExperimentConfig apply_experiment_name(const std::string& name, const ExperimentConfig& base);

struct AblationRow {
  std::string name;
  std::int64_t parameter_count = 0;
  PooledRow best;
};

// Cross-validates every grid entry with shared seeds and folds; writes
// ablation.txt and ablation.csv.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& base, const std::vector<std::string>& grid,
                                    const std::string& out_dir, std::ostream* log = nullptr);

}  // namespace attnseg
