#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "attnseg/commands.h"
#include "attnseg/error.h"

using namespace attnseg;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> fold;
  std::string dataset;
};

ExperimentConfig experiment(const std::string& path, const Overrides& o) {
  ExperimentConfig c = path.empty() ? default_experiment_config() : load_experiment_config(path);
  if (o.seed) c.train.seed = *o.seed;
  if (o.fold) c.data.fold = *o.fold;
  if (!o.dataset.empty()) c.data.dataset = o.dataset;
  validate(c);
  return c;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "training seed");
  cmd->add_option("--fold", o.fold, "test fold index");
  cmd->add_option("--dataset", o.dataset, "dataset directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D attention U-Net segmentation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  Overrides over;

  auto* phantom = app.add_subcommand("phantom", "generate a synthetic cohort");
  std::optional<int> count;
  std::optional<std::uint64_t> phantom_seed;
  phantom->add_option("--config", config_path, "cohort spec JSON");
  phantom->add_option("--count", count, "number of patients");
  phantom->add_option("--seed", phantom_seed, "cohort seed");
  phantom->add_option("--out", out_dir, "output dataset directory")->required();

  auto* train = app.add_subcommand("train", "train one fold");
  train->add_option("--config", config_path, "experiment JSON");
  train->add_option("--out", out_dir, "run directory")->required();
  add_overrides(train, over);

  auto* infer = app.add_subcommand("infer", "predict probability volumes");
  std::string checkpoint;
  std::vector<std::string> volumes;
  int repeat = 1;
  infer->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  infer->add_option("--out", out_dir, "prediction directory")->required();
  infer->add_option("--repeat", repeat, "consecutive runs per volume for timing")->check(CLI::PositiveNumber);
  infer->add_option("volumes", volumes, "volume directories")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predictions over all folds");
  std::string pred_dir;
  evaluate->add_option("--pred", pred_dir, "prediction directory")->required();
  evaluate->add_option("--config", config_path, "experiment JSON supplying the data section");
  evaluate->add_option("--out", out_dir, "report directory")->required();
  add_overrides(evaluate, over);

  auto* crossval = app.add_subcommand("crossval", "train, infer and evaluate every fold");
  crossval->add_option("--config", config_path, "experiment JSON");
  crossval->add_option("--out", out_dir, "output directory")->required();
  add_overrides(crossval, over);

  auto* ablate = app.add_subcommand("ablate", "cross-validate a grid of experiment names");
  std::vector<std::string> grid;
  ablate->add_option("--config", config_path, "base experiment JSON");
  ablate->add_option("--out", out_dir, "output directory")->required();
  ablate->add_option("--grid", grid, "experiment names, e.g. UNet-FV AGUNet-MS-DS")->required();
  add_overrides(ablate, over);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*phantom) {
      CohortSpec spec = config_path.empty() ? CohortSpec{} : load_cohort_spec(config_path);
      if (count) spec.count = *count;
      if (phantom_seed) spec.seed = *phantom_seed;
      const auto entries = cmd_phantom(out_dir, spec);
      std::cout << "wrote " << entries.size() << " phantoms to " << out_dir << "\n";
    } else if (*train) {
      const auto r = cmd_train(experiment(config_path, over), out_dir, &std::cout);
      std::cout << "best epoch " << r.history.best_epoch << ", checkpoint " << r.checkpoint << "\n";
    } else if (*infer) {
      for (const auto& t : cmd_infer(checkpoint, volumes, out_dir, repeat)) {
        std::cout << t.id << ": preprocess " << t.preprocess.mean << " s, forward " << t.forward.mean
                  << " s, reconstruct " << t.reconstruct.mean << " s, processing " << t.total.mean << " s\n";
      }
    } else if (*evaluate) {
      const ExperimentConfig c = experiment(config_path, over);
      if (c.data.dataset.empty()) throw ConfigError("data.dataset: no dataset directory given");
      const auto r = cmd_evaluate(pred_dir, c.data.dataset, c.data, out_dir);
      std::cout << format_table(r.report);
    } else if (*crossval) {
      cmd_crossval(experiment(config_path, over), out_dir, &std::cout);
    } else if (*ablate) {
      cmd_ablate(experiment(config_path, over), grid, out_dir, &std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 5;
  }
  return 0;
}
