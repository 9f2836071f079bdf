#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnseg/components.h"

namespace attnseg {

inline constexpr int kThresholdCount = 10;
// PT_k = (k + 1) / 10 for k = 0..9.
double threshold_value(int k);

// Masks prob >= PT for every PT; throws InputError for values outside [0, 1].
std::vector<std::vector<std::uint8_t>> threshold_sweep(std::span<const float> prob);
std::vector<std::uint8_t> threshold_mask(std::span<const float> prob, double pt);

// 2|A n B| / (|A| + |B|); 1 when both are empty.
double dice_score(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct ComponentPair {
  int gt = 0;
  int pred = 0;
  std::int64_t overlap = 0;
  double dice = 0;
};

struct DetectionRecord {
  std::string patient;
  double threshold = 0;
  std::vector<ComponentPair> pairs;
  std::vector<int> unmatched_gt;    // FN
  std::vector<int> unmatched_pred;  // FP

  int tp() const { return static_cast<int>(pairs.size()); }
  int fn() const { return static_cast<int>(unmatched_gt.size()); }
  int fp() const { return static_cast<int>(unmatched_pred.size()); }
  // 1.0 when there is nothing to find.
  double recall() const;
  // 1.0 with zero predictions (no false alarms).
  double precision() const;
};

// Greedy one-to-one pairing by descending overlap (ties: lower gt label,
// then lower pred label); any nonzero overlap qualifies.
DetectionRecord pair_components(const ComponentLabeling& gt, const ComponentLabeling& pred);

struct PatientMetrics {
  std::string patient;
  double threshold = 0;
  double dice = 0;
  // Mean pair Dice; meaningful only when has_tp.
  double dice_tp = 0;
  bool has_tp = false;
  double recall = 0;
  double precision = 0;
  int tp = 0, fn = 0, fp = 0;
};

// One entry per PT.
std::vector<PatientMetrics> patient_metrics(const std::string& patient, std::span<const std::uint8_t> gt,
                                            std::span<const float> prob, const Dims& dims);

}  // namespace attnseg
