#include "attnseg/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "attnseg/error.h"

namespace attnseg {

double threshold_value(int k) { return (k + 1) / 10.0; }

std::vector<std::uint8_t> threshold_mask(std::span<const float> prob, double pt) {
  std::vector<std::uint8_t> m(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) m[i] = prob[i] >= pt;
  return m;
}

std::vector<std::vector<std::uint8_t>> threshold_sweep(std::span<const float> prob) {
  for (float p : prob) {
    if (!(p >= 0.0f && p <= 1.0f)) throw InputError("threshold_sweep: probabilities must lie in [0, 1]");
  }
  std::vector<std::vector<std::uint8_t>> out;
  for (int k = 0; k < kThresholdCount; ++k) out.push_back(threshold_mask(prob, threshold_value(k)));
  return out;
}

double dice_score(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw InputError("dice_score: size mismatch");
  std::int64_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    na += a[i] != 0;
    nb += b[i] != 0;
  }
  return na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double DetectionRecord::recall() const { return tp() + fn() == 0 ? 1.0 : double(tp()) / double(tp() + fn()); }
double DetectionRecord::precision() const { return tp() + fp() == 0 ? 1.0 : double(tp()) / double(tp() + fp()); }

DetectionRecord pair_components(const ComponentLabeling& gt, const ComponentLabeling& pred) {
  if (gt.dims != pred.dims || gt.labels.size() != pred.labels.size()) {
    throw InputError("pair_components: labelings are on different grids");
  }
  std::map<std::pair<int, int>, std::int64_t> overlap;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    if (gt.labels[i] && pred.labels[i]) ++overlap[{gt.labels[i], pred.labels[i]}];
  }
  std::vector<ComponentPair> candidates;
  for (const auto& [key, n] : overlap) candidates.push_back({key.first, key.second, n, 0.0});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ComponentPair& a, const ComponentPair& b) { return a.overlap > b.overlap; });
  std::vector<bool> gt_used(static_cast<std::size_t>(gt.count) + 1), pred_used(static_cast<std::size_t>(pred.count) + 1);
  DetectionRecord r;
  for (auto c : candidates) {
    if (gt_used[static_cast<std::size_t>(c.gt)] || pred_used[static_cast<std::size_t>(c.pred)]) continue;
    gt_used[static_cast<std::size_t>(c.gt)] = pred_used[static_cast<std::size_t>(c.pred)] = true;
    const double sg = static_cast<double>(gt.sizes[static_cast<std::size_t>(c.gt - 1)]);
    const double sp = static_cast<double>(pred.sizes[static_cast<std::size_t>(c.pred - 1)]);
    c.dice = 2.0 * static_cast<double>(c.overlap) / (sg + sp);
    r.pairs.push_back(c);
  }
  std::sort(r.pairs.begin(), r.pairs.end(), [](const auto& a, const auto& b) { return a.gt < b.gt; });
  for (int g = 1; g <= gt.count; ++g) {
    if (!gt_used[static_cast<std::size_t>(g)]) r.unmatched_gt.push_back(g);
  }
  for (int p = 1; p <= pred.count; ++p) {
    if (!pred_used[static_cast<std::size_t>(p)]) r.unmatched_pred.push_back(p);
  }
  return r;
}

std::vector<PatientMetrics> patient_metrics(const std::string& patient, std::span<const std::uint8_t> gt,
                                            std::span<const float> prob, const Dims& dims) {
  if (gt.size() != prob.size() || static_cast<std::int64_t>(gt.size()) != dims_voxels(dims)) {
    throw InputError("patient_metrics: ground truth and probability map grids differ for '" + patient + "'");
  }
  const std::vector<std::uint8_t> gt_mask(gt.begin(), gt.end());
  const ComponentLabeling gt_cc = connected_components(gt_mask, dims);
  const auto masks = threshold_sweep(prob);
  std::vector<PatientMetrics> out;
  for (int k = 0; k < kThresholdCount; ++k) {
    const auto& mask = masks[static_cast<std::size_t>(k)];
    DetectionRecord rec = pair_components(gt_cc, connected_components(mask, dims));
    PatientMetrics m;
    m.patient = patient;
    m.threshold = threshold_value(k);
    m.dice = dice_score(gt_mask, mask);
    m.has_tp = rec.tp() > 0;
    if (m.has_tp) {
      double s = 0;
      for (const auto& p : rec.pairs) s += p.dice;
      m.dice_tp = s / rec.tp();
    }
    m.recall = rec.recall();
    m.precision = rec.precision();
    m.tp = rec.tp();
    m.fn = rec.fn();
    m.fp = rec.fp();
    out.push_back(m);
  }
  return out;
}

}  // namespace attnseg
