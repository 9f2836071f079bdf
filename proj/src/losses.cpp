#include "attnseg/losses.h"

#include <cmath>

#include "attnseg/error.h"
#include "attnseg/ops.h"

namespace attnseg {

std::string to_string(LossKind k) { return k == LossKind::dice ? "dice" : "focal_tversky"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "dice") return LossKind::dice;
  if (name == "focal_tversky") return LossKind::focal_tversky;
  throw ConfigError("loss.kind: unknown value '" + name + "' (expected dice, focal_tversky)");
}

void validate(const LossConfig& c) {
  if (c.tversky_alpha < 0 || c.tversky_beta < 0 || std::abs(c.tversky_alpha + c.tversky_beta - 1.0) > 1e-9) {
    throw ConfigError("loss.tversky_alpha + loss.tversky_beta must equal 1");
  }
  if (!(c.focal_gamma > 0)) throw ConfigError("loss.focal_gamma must be > 0");
  if (c.ds_weights != "uniform") throw ConfigError("loss.ds_weights: only 'uniform' is supported");
  if (!(c.epsilon > 0)) throw ConfigError("loss.epsilon must be > 0");
}

namespace {

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& target, const char* name) {
  if (!pred.defined() || !target.defined() || pred.shape() != target.shape()) {
    throw InputError(std::string(name) + ": prediction " + shape_to_string(pred.shape()) +
                     " and target " + shape_to_string(target.shape()) + " differ");
  }
  if (pred.ndim() < 3 || pred.dim(1) < 2) {
    throw InputError(std::string(name) + ": needs [B, C>=2, ...] maps");
  }
}

struct Sums {
  double p = 0, t = 0, pt = 0;
};

// Per (sample, foreground class) soft sums.
template <typename T>
std::vector<Sums> class_sums(const Tensor<T>& pred, const Tensor<T>& target) {
  const std::int64_t B = pred.dim(0), C = pred.dim(1), S = pred.numel() / (B * C);
  std::vector<Sums> sums(static_cast<std::size_t>(B * (C - 1)));
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t c = 1; c < C; ++c) {
      const T* p = pred.raw() + (b * C + c) * S;
      const T* t = target.raw() + (b * C + c) * S;
      Sums& s = sums[static_cast<std::size_t>(b * (C - 1) + c - 1)];
      for (std::int64_t i = 0; i < S; ++i) {
        s.p += p[i];
        s.t += t[i];
        s.pt += static_cast<double>(p[i]) * t[i];
      }
    }
  }
  return sums;
}

// value(s) gives the loss term; slope(s, t) gives d term / d p at a voxel
// with target t. The gradient is linear in t, so two evaluations suffice.
template <typename T, typename Value, typename Slope>
Tensor<T> reduce_loss(const Tensor<T>& pred, const Tensor<T>& target, const char* name, Value value,
                      Slope slope) {
  check_pair(pred, target, name);
  const std::vector<Sums> sums = class_sums(pred, target);
  double total = 0;
  for (const Sums& s : sums) total += value(s);
  const double n = static_cast<double>(sums.size());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / n));
  if (should_record<T>({&pred})) {
    out.set_requires_grad(true);
    active_tape<T>()->record(name, [pred = pred, target = target, out, sums, n, slope]() mutable {
      if (!out.has_grad() || !pred.requires_grad()) return;
      const double g = out.grad()[0] / n;
      const std::int64_t B = pred.dim(0), C = pred.dim(1), S = pred.numel() / (B * C);
      auto gp = pred.mutable_grad();
      for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t c = 1; c < C; ++c) {
          const Sums& s = sums[static_cast<std::size_t>(b * (C - 1) + c - 1)];
          const double at0 = slope(s, 0.0), at1 = slope(s, 1.0);
          const T* t = target.raw() + (b * C + c) * S;
          T* gv = gp.data() + (b * C + c) * S;
          for (std::int64_t i = 0; i < S; ++i) {
            gv[i] += static_cast<T>(g * (at0 + (at1 - at0) * t[i]));
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> dice_loss(const Tensor<T>& pred, const Tensor<T>& target, T eps) {
  const double e = eps;
  return reduce_loss(
      pred, target, "dice_loss",
      [e](const Sums& s) { return 1.0 - (2 * s.pt + e) / (s.p + s.t + e); },
      [e](const Sums& s, double t) {
        const double den = s.p + s.t + e;
        return -(2 * t * den - (2 * s.pt + e)) / (den * den);
      });
}

template <typename T>
Tensor<T> focal_tversky_loss(const Tensor<T>& pred, const Tensor<T>& target, T alpha, T beta, T gamma,
                             T eps) {
  const double a = alpha, b = beta, inv_g = 1.0 / static_cast<double>(gamma), e = eps;
  // TP = sum pt, FN = sum t - TP, FP = sum p - TP.
  auto ti = [=](const Sums& s) {
    return (s.pt + e) / (s.pt + a * (s.t - s.pt) + b * (s.p - s.pt) + e);
  };
  return reduce_loss(
      pred, target, "focal_tversky_loss",
      [=](const Sums& s) { return std::pow(std::max(1.0 - ti(s), 0.0), inv_g); },
      [=](const Sums& s, double t) {
        const double num = s.pt + e;
        const double den = s.pt + a * (s.t - s.pt) + b * (s.p - s.pt) + e;
        const double r = 1.0 - num / den;
        // The 1/gamma power has an unbounded slope at TI = 1.
        if (r <= 0.0) return 0.0;
        const double dnum = t, dden = t * (1 - a - b) + b;
        const double dti = (dnum * den - num * dden) / (den * den);
        return -inv_g * std::pow(r, inv_g - 1.0) * dti;
      });
}

template <typename T>
Tensor<T> segmentation_loss(const Tensor<T>& pred, const Tensor<T>& target, const LossConfig& c) {
  if (c.kind == LossKind::dice) return dice_loss(pred, target, static_cast<T>(c.epsilon));
  return focal_tversky_loss(pred, target, static_cast<T>(c.tversky_alpha),
                            static_cast<T>(c.tversky_beta), static_cast<T>(c.focal_gamma),
                            static_cast<T>(c.epsilon));
}

template <typename T>
DeepSupervisionLoss<T> deep_supervision_loss(std::span<const Tensor<T>> preds,
                                             std::span<const Tensor<T>> targets, const LossConfig& c) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw ConfigError("deep supervision: " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(targets.size()) + " targets");
  }
  DeepSupervisionLoss<T> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out.levels.push_back(segmentation_loss(preds[i], targets[i], c));
  }
  if (out.levels.size() == 1) {
    out.total = out.levels.front();
    return out;
  }
  const std::vector<T> w(out.levels.size(), T{1} / static_cast<T>(out.levels.size()));
  out.total = ops::weighted_sum<T>(out.levels, w);
  return out;
}

template <typename T>
std::vector<Tensor<T>> downsample_target(const Tensor<T>& target, int levels) {
  if (levels < 1) throw ConfigError("downsample_target needs levels >= 1");
  if (target.ndim() != 5) throw InputError("downsample_target expects [B,C,D,H,W]");
  std::vector<Tensor<T>> out{target};
  for (int l = 1; l < levels; ++l) {
    const Tensor<T>& src = out.back();
    const auto& s = src.shape();
    if (s[2] < 2 || s[3] < 2 || s[4] < 2) {
      throw ConfigError("target " + shape_to_string(target.shape()) + " too small for " +
                        std::to_string(levels) + " levels");
    }
    const std::int64_t D = s[2] / 2, H = s[3] / 2, W = s[4] / 2;
    Tensor<T> half(Shape{s[0], s[1], D, H, W});
    T* o = half.raw();
    for (std::int64_t p = 0; p < s[0] * s[1]; ++p) {
      const T* x = src.raw() + p * s[2] * s[3] * s[4];
      for (std::int64_t z = 0; z < D; ++z)
        for (std::int64_t y = 0; y < H; ++y)
          for (std::int64_t v = 0; v < W; ++v) *o++ = x[((2 * z) * s[3] + 2 * y) * s[4] + 2 * v];
    }
    out.push_back(half);
  }
  return std::vector<Tensor<T>>(out.rbegin(), out.rend());
}

#define ATTNSEG_INSTANTIATE(T)                                                                 \
  template Tensor<T> dice_loss(const Tensor<T>&, const Tensor<T>&, T);                         \
  template Tensor<T> focal_tversky_loss(const Tensor<T>&, const Tensor<T>&, T, T, T, T);       \
  template Tensor<T> segmentation_loss(const Tensor<T>&, const Tensor<T>&, const LossConfig&); \
  template DeepSupervisionLoss<T> deep_supervision_loss(std::span<const Tensor<T>>,            \
                                                        std::span<const Tensor<T>>,            \
                                                        const LossConfig&);                    \
  template std::vector<Tensor<T>> downsample_target(const Tensor<T>&, int);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg
