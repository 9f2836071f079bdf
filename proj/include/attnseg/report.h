#pragma once

#include <functional>
#include <string>
#include <vector>

#include "attnseg/metrics.h"

namespace attnseg {

struct Summary {
  double mean = 0;
  double std = 0;  // population std over folds
};

struct FoldMeans {
  double dice = 0, dice_tp = 0, recall = 0, precision = 0, f1 = 0;
  int patients = 0;
  // Patients with at least one paired component.
  int patients_with_tp = 0;
};

struct PooledRow {
  double threshold = 0;
  Summary dice, dice_tp, f1, recall, precision;
  std::vector<FoldMeans> folds;
};

struct PooledReport {
  std::vector<PooledRow> rows;  // one per PT
  int best = 0;                 // max pooled F1, ties -> higher Dice, then lower PT
  const PooledRow& best_row() const { return rows[static_cast<std::size_t>(best)]; }
};

// F1 of one fold from its patient-wise mean precision and recall.
double f1_score(double precision, double recall);

// per_fold[f] holds patient_metrics() output for every test patient of fold f
// (all PTs). Per fold the patient-wise means are taken; pooled values are the
// mean and std of those fold means. Dice-TP skips patients without pairs.
// Throws ConfigError for an empty fold.
PooledReport pooled_estimates(const std::vector<std::vector<PatientMetrics>>& per_fold);

// Keeps only the patients selected by `keep`; folds left empty are dropped.
PooledReport pooled_subset(const std::vector<std::vector<PatientMetrics>>& per_fold,
                           const std::function<bool(const std::string&)>& keep);

struct PatientVolume {
  std::string patient;
  double volume_ml = 0;
  double dice = 0;
};

struct VolumeBin {
  int index = 0;
  std::vector<std::string> patients;
  double min_volume_ml = 0, max_volume_ml = 0;
  double q1 = 0, median = 0, q3 = 0;
  double whisker_low = 0, whisker_high = 0;
  std::vector<double> outliers;
  double mean = 0;
};

// Linear-interpolated quantile of sorted values (q in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Sorted by (volume, patient id) and cut into `bins` chunks whose sizes differ
// by at most one (the larger chunks first). Box-plot statistics per bin with
// the 1.5 IQR whisker rule.
std::vector<VolumeBin> volume_bin_analysis(const std::vector<PatientVolume>& patients, int bins = 10);

// "PT | Dice | Dice-TP | F1 | Recall | Precision" with mean +- std in percent.
std::string format_table(const PooledReport& report);
std::string metrics_csv(const std::vector<std::vector<PatientMetrics>>& per_fold);
std::string bins_csv(const std::vector<VolumeBin>& bins);

}  // namespace attnseg
