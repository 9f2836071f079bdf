#include "attnseg/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "attnseg/error.h"

namespace attnseg {

double f1_score(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

namespace {

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

FoldMeans fold_means(const std::vector<PatientMetrics>& fold, double pt) {
  FoldMeans m;
  for (const auto& p : fold) {
    if (std::abs(p.threshold - pt) > 1e-12) continue;
    ++m.patients;
    m.dice += p.dice;
    m.recall += p.recall;
    m.precision += p.precision;
    if (p.has_tp) {
      ++m.patients_with_tp;
      m.dice_tp += p.dice_tp;
    }
  }
  if (m.patients == 0) throw ConfigError("pooled_estimates: a fold has no patients at PT " + std::to_string(pt));
  m.dice /= m.patients;
  m.recall /= m.patients;
  m.precision /= m.patients;
  if (m.patients_with_tp > 0) m.dice_tp /= m.patients_with_tp;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

}  // namespace

PooledReport pooled_estimates(const std::vector<std::vector<PatientMetrics>>& per_fold) {
  if (per_fold.empty()) throw ConfigError("pooled_estimates: no folds");
  PooledReport report;
  for (int k = 0; k < kThresholdCount; ++k) {
    PooledRow row;
    row.threshold = threshold_value(k);
    std::vector<double> dice, dice_tp, f1, recall, precision;
    for (std::size_t f = 0; f < per_fold.size(); ++f) {
      if (per_fold[f].empty()) throw ConfigError("pooled_estimates: fold " + std::to_string(f) + " is missing");
      const FoldMeans m = fold_means(per_fold[f], row.threshold);
      row.folds.push_back(m);
      dice.push_back(m.dice);
      if (m.patients_with_tp > 0) dice_tp.push_back(m.dice_tp);
      f1.push_back(m.f1);
      recall.push_back(m.recall);
      precision.push_back(m.precision);
    }
    row.dice = summarize(dice);
    row.dice_tp = summarize(dice_tp);
    row.f1 = summarize(f1);
    row.recall = summarize(recall);
    row.precision = summarize(precision);
    report.rows.push_back(row);
  }
  for (int k = 1; k < kThresholdCount; ++k) {
    const auto& a = report.rows[static_cast<std::size_t>(k)];
    const auto& b = report.rows[static_cast<std::size_t>(report.best)];
    if (a.f1.mean > b.f1.mean || (a.f1.mean == b.f1.mean && a.dice.mean > b.dice.mean)) report.best = k;
  }
  return report;
}

PooledReport pooled_subset(const std::vector<std::vector<PatientMetrics>>& per_fold,
                           const std::function<bool(const std::string&)>& keep) {
  std::vector<std::vector<PatientMetrics>> kept;
  for (const auto& fold : per_fold) {
    std::vector<PatientMetrics> f;
    for (const auto& m : fold) {
      if (keep(m.patient)) f.push_back(m);
    }
    if (!f.empty()) kept.push_back(std::move(f));
  }
  return pooled_estimates(kept);
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) throw InputError("quantile of an empty set");
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

std::vector<VolumeBin> volume_bin_analysis(const std::vector<PatientVolume>& patients, int bins) {
  if (bins < 1) throw ConfigError("volume_bin_analysis: bins must be >= 1");
  if (static_cast<int>(patients.size()) < bins) {
    throw ConfigError("volume_bin_analysis: " + std::to_string(patients.size()) + " patients for " +
                      std::to_string(bins) + " bins");
  }
  std::vector<PatientVolume> sorted = patients;
  std::sort(sorted.begin(), sorted.end(), [](const PatientVolume& a, const PatientVolume& b) {
    return a.volume_ml != b.volume_ml ? a.volume_ml < b.volume_ml : a.patient < b.patient;
  });
  const std::size_t n = sorted.size(), q = n / static_cast<std::size_t>(bins), r = n % static_cast<std::size_t>(bins);
  std::vector<VolumeBin> out;
  std::size_t start = 0;
  for (int b = 0; b < bins; ++b) {
    const std::size_t size = q + (static_cast<std::size_t>(b) < r ? 1 : 0);
    VolumeBin bin;
    bin.index = b;
    std::vector<double> dice;
    for (std::size_t i = start; i < start + size; ++i) {
      bin.patients.push_back(sorted[i].patient);
      dice.push_back(sorted[i].dice);
    }
    bin.min_volume_ml = sorted[start].volume_ml;
    bin.max_volume_ml = sorted[start + size - 1].volume_ml;
    std::sort(dice.begin(), dice.end());
    bin.q1 = quantile_sorted(dice, 0.25);
    bin.median = quantile_sorted(dice, 0.5);
    bin.q3 = quantile_sorted(dice, 0.75);
    const double iqr = bin.q3 - bin.q1, lo = bin.q1 - 1.5 * iqr, hi = bin.q3 + 1.5 * iqr;
    bin.whisker_low = bin.q1;
    bin.whisker_high = bin.q3;
    bool any = false;
    for (double d : dice) {
      bin.mean += d;
      if (d < lo || d > hi) {
        bin.outliers.push_back(d);
        continue;
      }
      bin.whisker_low = any ? std::min(bin.whisker_low, d) : d;
      bin.whisker_high = any ? std::max(bin.whisker_high, d) : d;
      any = true;
    }
    bin.mean /= static_cast<double>(dice.size());
    out.push_back(std::move(bin));
    start += size;
  }
  return out;
}

namespace {

std::string pct(const Summary& s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f +- %.2f", 100 * s.mean, 100 * s.std);
  return buf;
}

}  // namespace

std::string format_table(const PooledReport& report) {
  std::ostringstream os;
  os << "PT | Dice | Dice-TP | F1 | Recall | Precision\n";
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const auto& r = report.rows[k];
    char pt[8];
    std::snprintf(pt, sizeof pt, "%.1f", r.threshold);
    os << pt << " | " << pct(r.dice) << " | " << pct(r.dice_tp) << " | " << pct(r.f1) << " | " << pct(r.recall)
       << " | " << pct(r.precision) << (static_cast<int>(k) == report.best ? " | best" : "") << "\n";
  }
  return os.str();
}

std::string metrics_csv(const std::vector<std::vector<PatientMetrics>>& per_fold) {
  std::ostringstream os;
  os << "fold,patient,pt,dice,dice_tp,has_tp,recall,precision,tp,fn,fp\n";
  char buf[256];
  for (std::size_t f = 0; f < per_fold.size(); ++f) {
    for (const auto& m : per_fold[f]) {
      std::snprintf(buf, sizeof buf, "%zu,%s,%.1f,%.17g,%.17g,%d,%.17g,%.17g,%d,%d,%d\n", f, m.patient.c_str(),
                    m.threshold, m.dice, m.dice_tp, m.has_tp ? 1 : 0, m.recall, m.precision, m.tp, m.fn, m.fp);
      os << buf;
    }
  }
  return os.str();
}

std::string bins_csv(const std::vector<VolumeBin>& bins) {
  std::ostringstream os;
  os << "bin,count,min_volume_ml,max_volume_ml,mean,q1,median,q3,whisker_low,whisker_high,outliers\n";
  char buf[512];
  for (const auto& b : bins) {
    std::string outliers;
    for (double o : b.outliers) {
      char v[32];
      std::snprintf(v, sizeof v, "%s%.6g", outliers.empty() ? "" : ";", o);
      outliers += v;
    }
    std::snprintf(buf, sizeof buf, "%d,%zu,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%s\n", b.index, b.patients.size(),
                  b.min_volume_ml, b.max_volume_ml, b.mean, b.q1, b.median, b.q3, b.whisker_low, b.whisker_high,
                  outliers.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace attnseg
