#pragma once

#include <span>
#include <string>
#include <vector>

#include "attnseg/tensor.h"

namespace attnseg {

enum class LossKind { dice, focal_tversky };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::dice;
  double tversky_alpha = 0.7;  // weight on false negatives
  double tversky_beta = 0.3;   // weight on false positives
  double focal_gamma = 2.0;
  std::string ds_weights = "uniform";
  double epsilon = 1e-5;

  bool operator==(const LossConfig&) const = default;
};

void validate(const LossConfig& config);

// pred and target are [B, C, ...] with channel 0 the background. Both losses
// are evaluated per sample and per foreground class, then averaged, so a loss
// over a batch equals the mean of the per-sample losses.

// 1 - mean (2 sum(p t) + eps) / (sum p + sum t + eps)
template <typename T>
Tensor<T> dice_loss(const Tensor<T>& pred, const Tensor<T>& target, T eps = T(1e-5));

// mean (1 - TI)^(1/gamma), TI = (TP + eps) / (TP + alpha FN + beta FP + eps)
template <typename T>
Tensor<T> focal_tversky_loss(const Tensor<T>& pred, const Tensor<T>& target, T alpha, T beta,
                             T gamma, T eps = T(1e-5));

template <typename T>
Tensor<T> segmentation_loss(const Tensor<T>& pred, const Tensor<T>& target, const LossConfig& config);

template <typename T>
struct DeepSupervisionLoss {
  Tensor<T> total;
  // Same order as the predictions (coarse to fine); back() is the top level.
  std::vector<Tensor<T>> levels;
};

// Uniform weights 1/levels; a single prediction gives total == that loss.
template <typename T>
DeepSupervisionLoss<T> deep_supervision_loss(std::span<const Tensor<T>> preds,
                                             std::span<const Tensor<T>> targets,
                                             const LossConfig& config);

// Nearest-neighbour halving (voxel 2i) of a [B, C, D, H, W] target. Returns
// `levels` maps coarse to fine; back() is the input itself.
template <typename T>
std::vector<Tensor<T>> downsample_target(const Tensor<T>& target, int levels);

}  // namespace attnseg
