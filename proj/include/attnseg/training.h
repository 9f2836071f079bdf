#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attnseg/augment.h"
#include "attnseg/losses.h"
#include "attnseg/model.h"
#include "attnseg/optim.h"
#include "attnseg/volume.h"

namespace attnseg {

enum class CheckpointPolicy { total_loss, top_level_loss };

std::string to_string(CheckpointPolicy p);
CheckpointPolicy parse_checkpoint_policy(const std::string& name);

struct TrainConfig {
  double lr = 1e-3;
  int physical_batch = 2;
  int accumulation_steps = 16;
  int patience_epochs = 30;
  int max_epochs = 1000;
  CheckpointPolicy checkpoint_policy = CheckpointPolicy::total_loss;
  std::uint64_t seed = 0;
  bool augment = true;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

// Stops once `patience` epochs pass without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  // Returns true when training should stop after this epoch (1-based).
  bool update(int epoch, double monitored);
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

template <typename T>
struct Batch {
  Tensor<T> image;   // [B, 1, D, H, W]
  Tensor<T> target;  // [B, classes, D, H, W], one-hot
};

// Stacks preprocessed volumes; labels become one-hot over `classes`.
template <typename T>
Batch<T> make_batch(std::span<const Volume* const> samples, std::int64_t classes);

struct PassLosses {
  double total = 0;
  // Coarse to fine; back() is the top level.
  std::vector<double> levels;
};

// Forward, loss and backward for one sub-batch. Gradients add onto whatever
// the parameters already hold.
template <typename T>
PassLosses forward_backward(Model<T>& model, const Batch<T>& batch, const LossConfig& loss,
                            const ForwardContext& ctx);

// Loss only, without recording.
template <typename T>
PassLosses evaluate_batch(const Model<T>& model, const Batch<T>& batch, const LossConfig& loss);

// n forward/backward passes, gradients averaged over n, then one Adam step.
// A null rng disables dropout.
template <typename T>
PassLosses accumulate_gradients(Model<T>& model, Adam<T>& optimizer,
                                std::span<const Batch<T>> sub_batches, const LossConfig& loss,
                                Rng* rng);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_top_loss = 0;
  std::vector<double> val_level_losses;
  double val_dice = 0;
  double seconds = 0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_monitored = 0;
  bool stopped_early = false;

  // epoch,train_loss,val_loss,val_top_loss,val_level<i>...,val_dice[,seconds]
  std::string to_csv(bool include_seconds = true) const;
  double mean_epoch_seconds() const;
  double total_seconds() const;
};

// Hard Dice of the foreground argmax (prob >= 0.5) against the label.
double hard_dice(std::span<const float> foreground_prob, std::span<const std::uint8_t> label);

// Runs the full-resolution foreground probability for a preprocessed volume.
template <typename T>
std::vector<float> predict_foreground(const Model<T>& model, const Volume& v);

// Trains until early stopping or max_epochs and leaves the best-epoch
// weights (per the checkpoint policy) in the model. With an empty validation
// set the training loss is monitored.
template <typename T>
TrainingHistory train_model(Model<T>& model, const std::vector<Volume>& train,
                            const std::vector<Volume>& validation, const TrainConfig& config,
                            const LossConfig& loss,
                            const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace attnseg
