#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "attnseg/error.h"
#include "attnseg/ops.h"

namespace attnseg::ops {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InputError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

// Spatial extent after the first two axes.
template <typename T>
std::int64_t inner_size(const Tensor<T>& t) {
  std::int64_t n = 1;
  for (int i = 2; i < t.ndim(); ++i) n *= t.dim(i);
  return n;
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary(const Tensor<T>& x, const char* name, Fwd fwd, Bwd bwd_from_output) {
  Tensor<T> out(x.shape());
  const auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record(name, [x = x, out, bwd_from_output]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto go = out.grad();
      const auto ov = out.data();
      const auto xv = x.data();
      auto gi = x.mutable_grad();
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * bwd_from_output(xv[i], ov[i]);
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, "relu", [](T v) { return v > T{0} ? v : T{0}; },
      [](T in, T) { return in > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x, "sigmoid",
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T out) { return out * (T{1} - out); });
}

template <typename T>
Tensor<T> softmax_channel(const Tensor<T>& x) {
  if (x.ndim() < 2) throw InputError("softmax_channel needs a channel axis");
  const std::int64_t B = x.dim(0), C = x.dim(1), S = inner_size(x);
  Tensor<T> out(x.shape());
  const T* xv = x.raw();
  T* ov = out.raw();
  for (std::int64_t b = 0; b < B; ++b) {
    const std::int64_t base = b * C * S;
    for (std::int64_t s = 0; s < S; ++s) {
      T m = xv[base + s];
      for (std::int64_t c = 1; c < C; ++c) m = std::max(m, xv[base + c * S + s]);
      T z{0};
      for (std::int64_t c = 0; c < C; ++c) {
        const T e = std::exp(xv[base + c * S + s] - m);
        ov[base + c * S + s] = e;
        z += e;
      }
      for (std::int64_t c = 0; c < C; ++c) ov[base + c * S + s] /= z;
    }
  }
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("softmax_channel", [x = x, out, B, C, S]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const T* go = out.grad().data();
      const T* y = out.raw();
      T* gi = x.mutable_grad().data();
      for (std::int64_t b = 0; b < B; ++b) {
        const std::int64_t base = b * C * S;
        for (std::int64_t s = 0; s < S; ++s) {
          T dot{0};
          for (std::int64_t c = 0; c < C; ++c) dot += go[base + c * S + s] * y[base + c * S + s];
          for (std::int64_t c = 0; c < C; ++c) {
            const std::int64_t i = base + c * S + s;
            gi[i] += y[i] * (go[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const std::int64_t N = x.dim(-1);
  const std::int64_t rows = x.numel() / N;
  Tensor<T> out(x.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xv = x.raw() + r * N;
    T* ov = out.raw() + r * N;
    const T m = *std::max_element(xv, xv + N);
    T z{0};
    for (std::int64_t j = 0; j < N; ++j) {
      ov[j] = std::exp(xv[j] - m);
      z += ov[j];
    }
    for (std::int64_t j = 0; j < N; ++j) ov[j] /= z;
  }
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("softmax_lastdim", [x = x, out, rows, N]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const T* go = out.grad().data();
      const T* y = out.raw();
      T* gi = x.mutable_grad().data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t base = r * N;
        T dot{0};
        for (std::int64_t j = 0; j < N; ++j) dot += go[base + j] * y[base + j];
        for (std::int64_t j = 0; j < N; ++j) gi[base + j] += y[base + j] * (go[base + j] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a,
                         bool transpose_b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0)) {
    throw InputError("matmul_batched expects [B,.,.] operands with equal batch");
  }
  const std::int64_t B = a.dim(0);
  const std::int64_t ar = a.dim(1), ac = a.dim(2), br = b.dim(1), bc = b.dim(2);
  const std::int64_t M = transpose_a ? ac : ar, K = transpose_a ? ar : ac;
  const std::int64_t Kb = transpose_b ? bc : br, N = transpose_b ? br : bc;
  if (K != Kb) {
    throw InputError("matmul_batched inner dimension mismatch: " + shape_to_string(a.shape()) +
                     " x " + shape_to_string(b.shape()));
  }
  Tensor<T> out(Shape{B, M, N});
  for (std::int64_t i = 0; i < B; ++i) {
    CMapR<T> A(a.raw() + i * ar * ac, ar, ac);
    CMapR<T> Bm(b.raw() + i * br * bc, br, bc);
    MapR<T> O(out.raw() + i * M * N, M, N);
    if (!transpose_a && !transpose_b) O.noalias() = A * Bm;
    else if (transpose_a && !transpose_b) O.noalias() = A.transpose() * Bm;
    else if (!transpose_a && transpose_b) O.noalias() = A * Bm.transpose();
    else O.noalias() = A.transpose() * Bm.transpose();
  }
  if (should_record<T>({&a, &b})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("matmul_batched", [a = a, b = b, out, B, ar, ac, br, bc, M, N,
                                                transpose_a, transpose_b]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad().data();
      T* ga = a.requires_grad() ? a.mutable_grad().data() : nullptr;
      T* gb = b.requires_grad() ? b.mutable_grad().data() : nullptr;
      for (std::int64_t i = 0; i < B; ++i) {
        CMapR<T> G(go + i * M * N, M, N);
        CMapR<T> A(a.raw() + i * ar * ac, ar, ac);
        CMapR<T> Bm(b.raw() + i * br * bc, br, bc);
        if (ga) {
          MapR<T> dA(ga + i * ar * ac, ar, ac);
          // d op(A) = G op(B)^T
          if (!transpose_a) {
            if (!transpose_b) dA.noalias() += G * Bm.transpose();
            else dA.noalias() += G * Bm;
          } else {
            if (!transpose_b) dA.noalias() += Bm * G.transpose();
            else dA.noalias() += Bm.transpose() * G.transpose();
          }
        }
        if (gb) {
          MapR<T> dB(gb + i * br * bc, br, bc);
          // d op(B) = op(A)^T G
          if (!transpose_b) {
            if (!transpose_a) dB.noalias() += A.transpose() * G;
            else dB.noalias() += A * G;
          } else {
            if (!transpose_a) dB.noalias() += G.transpose() * A;
            else dB.noalias() += G.transpose() * A.transpose();
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  const auto av = a.data(), bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (should_record<T>({&a, &b})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("add", [a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      const auto go = out.grad();
      for (Tensor<T>* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto g = t->mutable_grad();
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  const auto av = a.data(), bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (should_record<T>({&a, &b})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("mul", [a = a, b = b, out]() mutable {
      if (!out.has_grad()) return;
      const auto go = out.grad();
      if (a.requires_grad()) {
        auto g = a.mutable_grad();
        const auto bv = b.data();
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto g = b.mutable_grad();
        const auto av = a.data();
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * av[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(
      x, "scale", [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& factor) {
  if (factor.numel() != 1) throw InputError("scale_by factor must hold a single element");
  const T f = factor[0];
  Tensor<T> out(x.shape());
  const auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * f;
  if (should_record<T>({&x, &factor})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("scale_by", [x = x, factor = factor, out]() mutable {
      if (!out.has_grad()) return;
      const auto go = out.grad();
      const auto xv = x.data();
      if (x.requires_grad()) {
        auto g = x.mutable_grad();
        const T f = factor[0];
        for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * f;
      }
      if (factor.requires_grad()) {
        T s{0};
        for (std::size_t i = 0; i < go.size(); ++i) s += go[i] * xv[i];
        factor.mutable_grad()[0] += s;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul_channel_broadcast(const Tensor<T>& x, const Tensor<T>& a) {
  if (x.ndim() < 2 || a.ndim() != x.ndim() || a.dim(0) != x.dim(0) || a.dim(1) != 1 ||
      inner_size(a) != inner_size(x)) {
    throw InputError("mul_channel_broadcast: coefficient shape " + shape_to_string(a.shape()) +
                     " incompatible with " + shape_to_string(x.shape()));
  }
  const std::int64_t B = x.dim(0), C = x.dim(1), S = inner_size(x);
  Tensor<T> out(x.shape());
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t s = 0; s < S; ++s) {
        out[(b * C + c) * S + s] = x[(b * C + c) * S + s] * a[b * S + s];
      }
  if (should_record<T>({&x, &a})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("mul_channel_broadcast", [x = x, a = a, out, B, C, S]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad().data();
      T* gx = x.requires_grad() ? x.mutable_grad().data() : nullptr;
      T* ga = a.requires_grad() ? a.mutable_grad().data() : nullptr;
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c)
          for (std::int64_t s = 0; s < S; ++s) {
            const std::int64_t i = (b * C + c) * S + s;
            if (gx) gx[i] += go[i] * a[b * S + s];
            if (ga) ga[b * S + s] += go[i] * x[i];
          }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw InputError("concat_channels of an empty list");
  Shape shape = parts[0].shape();
  const std::int64_t B = shape[0], S = inner_size(parts[0]);
  std::int64_t C = 0;
  for (const auto& p : parts) {
    if (p.ndim() != static_cast<int>(shape.size()) || p.dim(0) != B || inner_size(p) != S) {
      throw InputError("concat_channels: incompatible part " + shape_to_string(p.shape()) +
                       " vs " + shape_to_string(shape));
    }
    for (int i = 2; i < p.ndim(); ++i) {
      if (p.dim(i) != shape[static_cast<std::size_t>(i)]) {
        throw InputError("concat_channels: spatial mismatch " + shape_to_string(p.shape()) +
                         " vs " + shape_to_string(shape));
      }
    }
    C += p.dim(1);
  }
  shape[1] = C;
  Tensor<T> out(shape);
  std::vector<std::int64_t> offsets;
  std::int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::int64_t pc = p.dim(1);
    for (std::int64_t b = 0; b < B; ++b) {
      std::copy_n(p.raw() + b * pc * S, pc * S, out.raw() + (b * C + off) * S);
    }
    off += pc;
  }
  bool record = false;
  for (const auto& p : parts) record = record || should_record<T>({&p});
  if (record) {
    out.set_requires_grad(true);
    std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
    active_tape<T>()->record("concat_channels",
                             [inputs = std::move(inputs), offsets, out, B, C, S]() mutable {
                               if (!out.has_grad()) return;
                               const T* go = out.grad().data();
                               for (std::size_t k = 0; k < inputs.size(); ++k) {
                                 auto& p = inputs[k];
                                 if (!p.requires_grad()) continue;
                                 const std::int64_t pc = p.dim(1);
                                 T* g = p.mutable_grad().data();
                                 for (std::int64_t b = 0; b < B; ++b) {
                                   const T* src = go + (b * C + offsets[k]) * S;
                                   T* dst = g + b * pc * S;
                                   for (std::int64_t i = 0; i < pc * S; ++i) dst[i] += src[i];
                                 }
                               }
                             });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw InputError("reshape " + shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("reshape", [x = x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto go = out.grad();
      auto g = x.mutable_grad();
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s{0};
  for (T v : x.data()) s += v;
  Tensor<T> out = Tensor<T>::scalar(s);
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("sum", [x = x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const T go = out.grad()[0];
      for (T& g : x.mutable_grad()) g += go;
    });
  }
  return out;
}

template <typename T>
Tensor<T> weighted_sum(std::span<const Tensor<T>> scalars, std::span<const T> weights) {
  if (scalars.size() != weights.size() || scalars.empty()) {
    throw ConfigError("weighted_sum: " + std::to_string(scalars.size()) + " terms vs " +
                      std::to_string(weights.size()) + " weights");
  }
  T s{0};
  bool record = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].numel() != 1) throw InputError("weighted_sum terms must be scalars");
    s += weights[i] * scalars[i][0];
    record = record || should_record<T>({&scalars[i]});
  }
  Tensor<T> out = Tensor<T>::scalar(s);
  if (record) {
    out.set_requires_grad(true);
    std::vector<Tensor<T>> terms(scalars.begin(), scalars.end());
    std::vector<T> w(weights.begin(), weights.end());
    active_tape<T>()->record("weighted_sum", [terms = std::move(terms), w = std::move(w), out]() mutable {
      if (!out.has_grad()) return;
      const T go = out.grad()[0];
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].requires_grad()) terms[i].mutable_grad()[0] += go * w[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> spatial_dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InputError("spatial_dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  if (x.ndim() < 2) throw InputError("spatial_dropout needs a channel axis");
  const std::int64_t planes = x.dim(0) * x.dim(1), S = inner_size(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(static_cast<std::size_t>(planes));
  for (auto& m : mask) m = uniform01(rng) < rate ? T{0} : keep_scale;
  Tensor<T> out(x.shape());
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t s = 0; s < S; ++s) out[p * S + s] = x[p * S + s] * mask[static_cast<std::size_t>(p)];
  if (should_record<T>({&x})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("spatial_dropout", [x = x, out, mask = std::move(mask), S]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const T* go = out.grad().data();
      T* g = x.mutable_grad().data();
      for (std::size_t p = 0; p < mask.size(); ++p) {
        const std::int64_t base = static_cast<std::int64_t>(p) * S;
        for (std::int64_t s = 0; s < S; ++s) g[base + s] += go[base + s] * mask[p];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        T eps) {
  if (x.ndim() < 3) throw InputError("instance_norm needs [B,C,spatial...]");
  const std::int64_t B = x.dim(0), C = x.dim(1), S = inner_size(x);
  const bool affine = gamma.defined();
  if (affine && (gamma.numel() != C || !beta.defined() || beta.numel() != C)) {
    throw ConfigError("instance_norm affine parameters must have one entry per channel");
  }
  Tensor<T> out(x.shape());
  std::vector<T> xhat(static_cast<std::size_t>(x.numel()));
  std::vector<T> inv_std(static_cast<std::size_t>(B * C));
  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t c = 0; c < C; ++c) {
      const std::int64_t base = (b * C + c) * S;
      const T* xv = x.raw() + base;
      T mean{0};
      for (std::int64_t s = 0; s < S; ++s) mean += xv[s];
      mean /= static_cast<T>(S);
      T var{0};
      for (std::int64_t s = 0; s < S; ++s) var += (xv[s] - mean) * (xv[s] - mean);
      var /= static_cast<T>(S);
      const T is = T{1} / std::sqrt(var + eps);
      inv_std[static_cast<std::size_t>(b * C + c)] = is;
      const T g = affine ? gamma[c] : T{1};
      const T bt = affine ? beta[c] : T{0};
      for (std::int64_t s = 0; s < S; ++s) {
        const T h = (xv[s] - mean) * is;
        xhat[static_cast<std::size_t>(base + s)] = h;
        out[base + s] = h * g + bt;
      }
    }
  }
  if (should_record<T>({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("instance_norm", [x = x, gamma = gamma, beta = beta, out,
                                               xhat = std::move(xhat), inv_std = std::move(inv_std),
                                               B, C, S, affine]() mutable {
      if (!out.has_grad()) return;
      const T* go = out.grad().data();
      T* gx = x.requires_grad() ? x.mutable_grad().data() : nullptr;
      T* gg = affine && gamma.requires_grad() ? gamma.mutable_grad().data() : nullptr;
      T* gb = affine && beta.requires_grad() ? beta.mutable_grad().data() : nullptr;
      for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t c = 0; c < C; ++c) {
          const std::int64_t base = (b * C + c) * S;
          const T g = affine ? gamma[c] : T{1};
          T sum_dh{0}, sum_dh_h{0}, sum_go{0}, sum_go_h{0};
          for (std::int64_t s = 0; s < S; ++s) {
            const T h = xhat[static_cast<std::size_t>(base + s)];
            const T dh = go[base + s] * g;
            sum_dh += dh;
            sum_dh_h += dh * h;
            sum_go += go[base + s];
            sum_go_h += go[base + s] * h;
          }
          if (gg) gg[c] += sum_go_h;
          if (gb) gb[c] += sum_go;
          if (gx) {
            const T is = inv_std[static_cast<std::size_t>(b * C + c)];
            const T inv_n = T{1} / static_cast<T>(S);
            for (std::int64_t s = 0; s < S; ++s) {
              const T h = xhat[static_cast<std::size_t>(base + s)];
              const T dh = go[base + s] * g;
              gx[base + s] += is * (dh - inv_n * sum_dh - h * inv_n * sum_dh_h);
            }
          }
        }
      }
    });
  }
  return out;
}

#define ATTNSEG_INSTANTIATE(T)                                                                  \
  template Tensor<T> relu(const Tensor<T>&);                                                    \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                 \
  template Tensor<T> softmax_channel(const Tensor<T>&);                                         \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                         \
  template Tensor<T> matmul_batched(const Tensor<T>&, const Tensor<T>&, bool, bool);            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> scale(const Tensor<T>&, T);                                                \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> mul_channel_broadcast(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                               \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                          \
  template Tensor<T> sum(const Tensor<T>&);                                                     \
  template Tensor<T> weighted_sum(std::span<const Tensor<T>>, std::span<const T>);              \
  template Tensor<T> spatial_dropout(const Tensor<T>&, double, bool, Rng&);                     \
  template Tensor<T> instance_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg::ops
