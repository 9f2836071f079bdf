#include "attnseg/commands.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "attnseg/checkpoint.h"
#include "attnseg/error.h"
#include "attnseg/preprocess.h"
#include "attnseg/training.h"

namespace attnseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

Dims model_dims(const ModelConfig& m) { return {m.input_shape[0], m.input_shape[1], m.input_shape[2]}; }

std::map<std::string, ManifestEntry> by_id(const std::vector<ManifestEntry>& entries) {
  std::map<std::string, ManifestEntry> m;
  for (const auto& e : entries) m[e.id] = e;
  return m;
}

std::vector<Volume> load_preprocessed(const std::string& dataset, const std::vector<std::string>& ids,
                                      const std::map<std::string, ManifestEntry>& index, const Dims& target) {
  std::vector<Volume> out;
  for (const auto& id : ids) {
    out.push_back(preprocess(read_volume(dataset + "/" + index.at(id).path), target).volume);
  }
  return out;
}

PhaseTiming timing(const std::vector<double>& v) {
  PhaseTiming t;
  for (double x : v) t.mean += x;
  t.mean /= static_cast<double>(v.size());
  for (double x : v) t.std += (x - t.mean) * (x - t.mean);
  t.std = std::sqrt(t.std / static_cast<double>(v.size()));
  return t;
}

json to_json(const PhaseTiming& t) { return {{"mean", t.mean}, {"std", t.std}}; }

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

json row_json(const PooledRow& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"dice", f.dice},
                     {"dice_tp", f.dice_tp},
                     {"f1", f.f1},
                     {"recall", f.recall},
                     {"precision", f.precision},
                     {"patients", f.patients},
                     {"patients_with_tp", f.patients_with_tp}});
  }
  return {{"pt", r.threshold},
          {"dice", summary_json(r.dice)},
          {"dice_tp", summary_json(r.dice_tp)},
          {"f1", summary_json(r.f1)},
          {"recall", summary_json(r.recall)},
          {"precision", summary_json(r.precision)},
          {"folds", folds}};
}

}  // namespace

std::vector<ManifestEntry> cmd_phantom(const std::string& out_dir, const CohortSpec& cohort) {
  ensure_dir(out_dir);
  std::vector<ManifestEntry> entries;
  for (const PhantomSpec& spec : cohort_specs(cohort)) {
    const Volume v = generate_phantom(spec);
    write_volume(out_dir + "/" + spec.id, v);
    entries.push_back({spec.id, spec.id, label_volume_ml(v)});
  }
  write_manifest(out_dir, entries);
  return entries;
}

CohortSpec load_cohort_spec(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  CohortSpec c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "count") c.count = v.get<int>();
      else if (key == "min_volume_ml") c.min_volume_ml = v.get<double>();
      else if (key == "max_volume_ml") c.max_volume_ml = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "phantom") {
        PhantomSpec& p = c.base;
        for (const auto& [k, x] : v.items()) {
          if (k == "dims") p.dims = x.get<Dims>();
          else if (k == "spacing") p.spacing = x.get<std::array<double, 3>>();
          else if (k == "head_semi_axes") p.head_semi_axes = x.get<std::array<double, 3>>();
          else if (k == "head_intensity") p.head_intensity = x.get<double>();
          else if (k == "tumor_intensity") p.tumor_intensity = x.get<double>();
          else if (k == "tumor_elongation") p.tumor_elongation = x.get<double>();
          else if (k == "vessel_count") p.vessel_count = x.get<int>();
          else if (k == "vessel_radius_mm") p.vessel_radius_mm = x.get<double>();
          else if (k == "vessel_intensity") p.vessel_intensity = x.get<double>();
          else if (k == "noise_sigma") p.noise_sigma = x.get<double>();
          else throw ConfigError("phantom." + k + ": unknown field");
        }
      } else {
        throw ConfigError(key + ": unknown field");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

FoldSplit dataset_split(const std::string& dataset_dir, const DataConfig& data) {
  std::vector<CohortMember> cohort;
  for (const auto& e : read_manifest(dataset_dir)) cohort.push_back({e.id, e.tumor_volume_ml});
  return split_folds(cohort, data.folds, data.split_seed);
}

TrainOutputs cmd_train(const ExperimentConfig& config, const std::string& out_dir, std::ostream* log) {
  validate(config);
  if (config.data.dataset.empty()) throw ConfigError("data.dataset: no dataset directory given");
  ensure_dir(out_dir);
  const auto entries = read_manifest(config.data.dataset);
  const FoldSplit split = dataset_split(config.data.dataset, config.data);
  const FoldRoles roles = split.roles(config.data.fold);
  const auto index = by_id(entries);
  const Dims target = model_dims(config.model);
  if (roles.train.empty()) throw ConfigError("data.folds: fold " + std::to_string(config.data.fold) + " leaves no training patients");
  const std::vector<Volume> train = load_preprocessed(config.data.dataset, roles.train, index, target);
  const std::vector<Volume> val = load_preprocessed(config.data.dataset, roles.validation, index, target);

  Model<float> model(config.model, config.train.seed);
  const std::string name = experiment_name(config);
  if (log) {
    *log << name << " fold " << config.data.fold << ": " << model.parameter_count() << " parameters, "
         << train.size() << " train / " << val.size() << " validation" << std::endl;
  }
  TrainOutputs out;
  out.history = train_model(model, train, val, config.train, config.loss, [&](const EpochRecord& r) {
    if (log) {
      *log << "  epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << " dice " << r.val_dice
           << " (" << r.seconds << " s)" << std::endl;
    }
  });
  out.parameter_count = model.parameter_count();
  out.checkpoint = out_dir + "/checkpoint.bin";
  save_checkpoint(model, out.checkpoint);
  write_text(out_dir + "/history.csv", out.history.to_csv(true));
  write_text(out_dir + "/config.json", attnseg::to_json(config).dump(2) + "\n");

  std::vector<double> epoch_seconds;
  for (const auto& e : out.history.epochs) epoch_seconds.push_back(e.seconds);
  out.manifest = {{"experiment", name},
                  {"config", attnseg::to_json(config)},
                  {"seed", config.train.seed},
                  {"parameter_count", out.parameter_count},
                  {"epochs_run", out.history.epochs.size()},
                  {"epoch_seconds", epoch_seconds},
                  {"seconds_per_epoch", out.history.mean_epoch_seconds()},
                  {"best_epoch", out.history.best_epoch},
                  {"best_monitored_loss", out.history.best_monitored},
                  {"stopped_early", out.history.stopped_early},
                  {"train_hours", out.history.total_seconds() / 3600.0},
                  {"fold", config.data.fold},
                  {"train_ids", roles.train},
                  {"validation_ids", roles.validation},
                  {"test_ids", roles.test}};
  write_text(out_dir + "/run_manifest.json", out.manifest.dump(2) + "\n");
  return out;
}

std::vector<InferTiming> cmd_infer(const std::string& checkpoint, const std::vector<std::string>& volume_dirs,
                                   const std::string& out_dir, int repeat) {
  if (repeat < 1) throw ConfigError("--repeat must be >= 1");
  const auto t_load = Clock::now();
  const auto model = load_checkpoint<float>(checkpoint);
  const double load_seconds = seconds_since(t_load);
  const Dims target = model_dims(model->config());
  ensure_dir(out_dir);
  std::vector<InferTiming> timings;
  json per_volume = json::array();
  for (const auto& dir : volume_dirs) {
    const Volume input = read_volume(dir);
    std::vector<double> pre, fwd, rec, total;
    Volume result;
    for (int r = 0; r < repeat; ++r) {
      const auto t0 = Clock::now();
      const Preprocessed p = preprocess(input, target);
      const auto t1 = Clock::now();
      const std::vector<float> fg = predict_foreground(*model, p.volume);
      const auto t2 = Clock::now();
      Volume out = invert_to_original(fg, p.record);
      const auto t3 = Clock::now();
      out.id = input.id;
      if (r > 0 && out.data != result.data) {
        throw IntegrityError("inference on '" + input.id + "' is not reproducible across repeats");
      }
      result = std::move(out);
      pre.push_back(std::chrono::duration<double>(t1 - t0).count());
      fwd.push_back(std::chrono::duration<double>(t2 - t1).count());
      rec.push_back(std::chrono::duration<double>(t3 - t2).count());
      total.push_back(std::chrono::duration<double>(t3 - t0).count());
    }
    write_volume(out_dir + "/" + input.id, result);
    InferTiming t{input.id, timing(pre), timing(fwd), timing(rec), timing(total)};
    per_volume.push_back({{"id", t.id},
                          {"preprocess", to_json(t.preprocess)},
                          {"forward", to_json(t.forward)},
                          {"reconstruct", to_json(t.reconstruct)},
                          {"processing", to_json(t.total)}});
    timings.push_back(t);
  }
  const json report = {{"checkpoint", checkpoint},
                       {"repeat", repeat},
                       {"model_load_seconds", load_seconds},
                       {"volumes", per_volume}};
  write_text(out_dir + "/timing.json", report.dump(2) + "\n");
  return timings;
}

EvaluationOutputs cmd_evaluate(const std::string& pred_dir, const std::string& dataset_dir, const DataConfig& data,
                               const std::string& out_dir) {
  const auto entries = read_manifest(dataset_dir);
  const auto index = by_id(entries);
  const FoldSplit split = dataset_split(dataset_dir, data);
  std::vector<std::string> missing;
  for (const auto& e : entries) {
    if (!fs::exists(pred_dir + "/" + e.id + "/meta.json")) missing.push_back(e.id);
  }
  if (!missing.empty()) {
    std::string msg = "missing predictions for";
    for (const auto& id : missing) msg += " " + id;
    throw ConfigError(msg);
  }
  EvaluationOutputs out;
  out.per_fold.resize(static_cast<std::size_t>(data.folds));
  std::map<std::string, double> best_dice;
  for (int f = 0; f < data.folds; ++f) {
    for (const auto& id : split.members(f)) {
      const Volume gt = read_volume(dataset_dir + "/" + index.at(id).path);
      const Volume pred = read_volume(pred_dir + "/" + id);
      if (gt.dims != pred.dims) {
        throw InputError("prediction for '" + id + "' has dims " + dims_to_string(pred.dims) + ", ground truth " +
                         dims_to_string(gt.dims));
      }
      const auto m = patient_metrics(id, gt.label, pred.data, gt.dims);
      out.per_fold[static_cast<std::size_t>(f)].insert(out.per_fold[static_cast<std::size_t>(f)].end(), m.begin(), m.end());
    }
  }
  out.report = pooled_estimates(out.per_fold);
  const double best_pt = out.report.best_row().threshold;
  for (const auto& fold : out.per_fold) {
    for (const auto& m : fold) {
      if (std::abs(m.threshold - best_pt) < 1e-12) best_dice[m.patient] = m.dice;
    }
  }
  for (const auto& e : entries) out.volumes.push_back({e.id, e.tumor_volume_ml, best_dice.at(e.id)});
  const int bins = std::min<int>(10, static_cast<int>(out.volumes.size()));
  if (bins > 0) out.bins = volume_bin_analysis(out.volumes, bins);

  ensure_dir(out_dir);
  json rows = json::array();
  for (const auto& r : out.report.rows) rows.push_back(row_json(r));
  const json pooled = {{"best_pt", best_pt}, {"best", row_json(out.report.best_row())}, {"rows", rows}};
  write_text(out_dir + "/metrics.csv", metrics_csv(out.per_fold));
  write_text(out_dir + "/pooled.json", pooled.dump(2) + "\n");
  write_text(out_dir + "/table.txt", format_table(out.report));
  write_text(out_dir + "/bins.csv", bins_csv(out.bins));
  return out;
}

CrossValidationOutputs cmd_crossval(const ExperimentConfig& config, const std::string& out_dir, std::ostream* log) {
  validate(config);
  const auto entries = read_manifest(config.data.dataset);
  const auto index = by_id(entries);
  const FoldSplit split = dataset_split(config.data.dataset, config.data);
  CrossValidationOutputs out;
  for (int f = 0; f < config.data.folds; ++f) {
    ExperimentConfig c = config;
    c.data.fold = f;
    const std::string fold_dir = out_dir + "/fold" + std::to_string(f);
    out.folds.push_back(cmd_train(c, fold_dir, log));
    std::vector<std::string> dirs;
    for (const auto& id : split.members(f)) dirs.push_back(config.data.dataset + "/" + index.at(id).path);
    cmd_infer(out.folds.back().checkpoint, dirs, out_dir + "/predictions");
  }
  out.evaluation = cmd_evaluate(out_dir + "/predictions", config.data.dataset, config.data, out_dir + "/evaluation");
  if (log) *log << format_table(out.evaluation.report);
  return out;
}

ExperimentConfig apply_experiment_name(const std::string& name, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  std::vector<std::string> tags;
  std::stringstream ss(name);
  for (std::string t; std::getline(ss, t, '-');) tags.push_back(t);
  if (tags.empty()) throw ConfigError("empty experiment name");
  const std::map<std::string, Attention> arch = {{"UNet", Attention::none},
                                                 {"AGUNet", Attention::gated},
                                                 {"DAUNet", Attention::dual},
                                                 {"DAGUNet", Attention::dual_guided}};
  if (!arch.count(tags[0])) throw ConfigError("experiment '" + name + "': unknown architecture " + tags[0]);
  c.model.attention = arch.at(tags[0]);
  c.model.multiscale_input = c.model.deep_supervision = false;
  const int ag_steps = base.train.accumulation_steps > 1 ? base.train.accumulation_steps : 4;
  c.train.accumulation_steps = 1;
  c.train.checkpoint_policy = CheckpointPolicy::total_loss;
  c.loss.kind = LossKind::dice;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    const std::string& t = tags[i];
    if (t == "FV" && tags[0] == "UNet") continue;
    if (t == "MS") c.model.multiscale_input = true;
    else if (t == "DS") c.model.deep_supervision = true;
    else if (t == "AG") c.train.accumulation_steps = ag_steps;
    else if (t == "Top") c.train.checkpoint_policy = CheckpointPolicy::top_level_loss;
    else if (t == "FTL" || t == "TFL") c.loss.kind = LossKind::focal_tversky;
    else throw ConfigError("experiment '" + name + "': unknown tag " + t);
  }
  return c;
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& base, const std::vector<std::string>& grid,
                                    const std::string& out_dir, std::ostream* log) {
  if (grid.empty()) throw ConfigError("ablation grid is empty");
  ensure_dir(out_dir);
  std::vector<AblationRow> rows;
  for (const auto& name : grid) {
    const ExperimentConfig c = apply_experiment_name(name, base);
    const CrossValidationOutputs cv = cmd_crossval(c, out_dir + "/" + experiment_name(c), log);
    rows.push_back({experiment_name(c), cv.folds.front().parameter_count, cv.evaluation.report.best_row()});
  }
  std::ostringstream table, csv;
  table << "shared seed " << base.train.seed << ", split seed " << base.data.split_seed << ", " << base.data.folds
        << " folds\n";
  table << "Experiment | # params | PT | Dice | Dice-TP | F1 | Recall | Precision\n";
  csv << "experiment,params,pt,dice,dice_std,dice_tp,dice_tp_std,f1,f1_std,recall,recall_std,precision,precision_std\n";
  char buf[512];
  for (const auto& r : rows) {
    const PooledRow& b = r.best;
    std::snprintf(buf, sizeof buf, "%s | %lld | %.1f | %.2f +- %.2f | %.2f +- %.2f | %.2f +- %.2f | %.2f +- %.2f | %.2f +- %.2f\n",
                  r.name.c_str(), static_cast<long long>(r.parameter_count), b.threshold, 100 * b.dice.mean,
                  100 * b.dice.std, 100 * b.dice_tp.mean, 100 * b.dice_tp.std, 100 * b.f1.mean, 100 * b.f1.std,
                  100 * b.recall.mean, 100 * b.recall.std, 100 * b.precision.mean, 100 * b.precision.std);
    table << buf;
    std::snprintf(buf, sizeof buf, "%s,%lld,%.1f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.name.c_str(), static_cast<long long>(r.parameter_count), b.threshold, b.dice.mean, b.dice.std,
                  b.dice_tp.mean, b.dice_tp.std, b.f1.mean, b.f1.std, b.recall.mean, b.recall.std, b.precision.mean,
                  b.precision.std);
    csv << buf;
  }
  write_text(out_dir + "/ablation.txt", table.str());
  write_text(out_dir + "/ablation.csv", csv.str());
  if (log) *log << table.str();
  return rows;
}

}  // namespace attnseg
