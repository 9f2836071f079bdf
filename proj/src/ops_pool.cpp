#include <limits>
#include <string>

#include "attnseg/error.h"
#include "attnseg/ops.h"

namespace attnseg::ops {

namespace {

struct PoolGeometry {
  std::int64_t planes;  // batch * channels
  Int3 in;
  Int3 out;
};

template <typename T>
PoolGeometry pool_geometry(const Tensor<T>& x, const PoolOptions& opt, const char* name) {
  if (!x.defined() || x.ndim() != 5) {
    throw InputError(std::string(name) + " input must be a 5-D tensor [B,C,D,H,W]");
  }
  const auto& s = x.shape();
  PoolGeometry g{s[0] * s[1], {s[2], s[3], s[4]}, {}};
  for (int i = 0; i < 3; ++i) {
    if (opt.kernel[i] < 1 || opt.stride[i] < 1 || opt.padding[i] < 0) {
      throw InputError(std::string(name) + ": invalid kernel/stride/padding");
    }
    if (opt.padding[i] >= opt.kernel[i]) {
      throw InputError(std::string(name) + ": padding must be smaller than the kernel");
    }
    if (g.in[i] + 2 * opt.padding[i] < opt.kernel[i]) {
      throw InputError(std::string(name) + ": kernel does not fit the padded input");
    }
    g.out[i] = (g.in[i] + 2 * opt.padding[i] - opt.kernel[i]) / opt.stride[i] + 1;
  }
  return g;
}

// Visits the in-bounds linear offsets of one pooling window.
template <typename F>
void for_window(const PoolGeometry& g, const PoolOptions& opt, std::int64_t od, std::int64_t oh,
                std::int64_t ow, F&& f) {
  const auto [D, H, W] = g.in;
  for (std::int64_t a = 0; a < opt.kernel[0]; ++a) {
    const std::int64_t id = od * opt.stride[0] - opt.padding[0] + a;
    if (id < 0 || id >= D) continue;
    for (std::int64_t b = 0; b < opt.kernel[1]; ++b) {
      const std::int64_t ih = oh * opt.stride[1] - opt.padding[1] + b;
      if (ih < 0 || ih >= H) continue;
      for (std::int64_t e = 0; e < opt.kernel[2]; ++e) {
        const std::int64_t iw = ow * opt.stride[2] - opt.padding[2] + e;
        if (iw < 0 || iw >= W) continue;
        f((id * H + ih) * W + iw);
      }
    }
  }
}

std::int64_t vol(const Int3& d) { return d[0] * d[1] * d[2]; }

}  // namespace

template <typename T>
Tensor<T> avg_pool3d(const Tensor<T>& input, const PoolOptions& opt) {
  const PoolGeometry g = pool_geometry(input, opt, "avg_pool3d");
  const auto& s = input.shape();
  Tensor<T> out(Shape{s[0], s[1], g.out[0], g.out[1], g.out[2]});
  const std::int64_t in_vol = vol(g.in), out_vol = vol(g.out);
  for (std::int64_t p = 0; p < g.planes; ++p) {
    const T* x = input.raw() + p * in_vol;
    T* o = out.raw() + p * out_vol;
    for (std::int64_t od = 0, k = 0; od < g.out[0]; ++od) {
      for (std::int64_t oh = 0; oh < g.out[1]; ++oh) {
        for (std::int64_t ow = 0; ow < g.out[2]; ++ow, ++k) {
          T acc{0};
          std::int64_t count = 0;
          for_window(g, opt, od, oh, ow, [&](std::int64_t i) {
            acc += x[i];
            ++count;
          });
          o[k] = acc / static_cast<T>(count);
        }
      }
    }
  }
  if (should_record<T>({&input})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("avg_pool3d", [input = input, out, g, opt, in_vol, out_vol]() mutable {
      if (!out.has_grad() || !input.requires_grad()) return;
      const T* go = out.grad().data();
      T* gi = input.mutable_grad().data();
      for (std::int64_t p = 0; p < g.planes; ++p) {
        for (std::int64_t od = 0, k = 0; od < g.out[0]; ++od) {
          for (std::int64_t oh = 0; oh < g.out[1]; ++oh) {
            for (std::int64_t ow = 0; ow < g.out[2]; ++ow, ++k) {
              std::int64_t count = 0;
              for_window(g, opt, od, oh, ow, [&](std::int64_t) { ++count; });
              const T share = go[p * out_vol + k] / static_cast<T>(count);
              for_window(g, opt, od, oh, ow, [&](std::int64_t i) { gi[p * in_vol + i] += share; });
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool3d(const Tensor<T>& input, const PoolOptions& opt) {
  const PoolGeometry g = pool_geometry(input, opt, "max_pool3d");
  const auto& s = input.shape();
  Tensor<T> out(Shape{s[0], s[1], g.out[0], g.out[1], g.out[2]});
  const std::int64_t in_vol = vol(g.in), out_vol = vol(g.out);
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(g.planes * out_vol));
  for (std::int64_t p = 0; p < g.planes; ++p) {
    const T* x = input.raw() + p * in_vol;
    T* o = out.raw() + p * out_vol;
    for (std::int64_t od = 0, k = 0; od < g.out[0]; ++od) {
      for (std::int64_t oh = 0; oh < g.out[1]; ++oh) {
        for (std::int64_t ow = 0; ow < g.out[2]; ++ow, ++k) {
          T best = -std::numeric_limits<T>::infinity();
          std::int64_t best_i = -1;
          for_window(g, opt, od, oh, ow, [&](std::int64_t i) {
            if (best_i < 0 || x[i] > best) {
              best = x[i];
              best_i = i;
            }
          });
          o[k] = best;
          argmax[static_cast<std::size_t>(p * out_vol + k)] = p * in_vol + best_i;
        }
      }
    }
  }
  if (should_record<T>({&input})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("max_pool3d", [input = input, out, argmax = std::move(argmax)]() mutable {
      if (!out.has_grad() || !input.requires_grad()) return;
      const auto go = out.grad();
      auto gi = input.mutable_grad();
      for (std::size_t k = 0; k < argmax.size(); ++k) {
        gi[static_cast<std::size_t>(argmax[k])] += go[k];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> upsample_nearest3d(const Tensor<T>& input, std::int64_t factor) {
  if (!input.defined() || input.ndim() != 5) {
    throw InputError("upsample_nearest3d input must be a 5-D tensor [B,C,D,H,W]");
  }
  if (factor < 1) throw InputError("upsample_nearest3d factor must be >= 1");
  if (factor == 1) return input;
  const auto& s = input.shape();
  const std::int64_t planes = s[0] * s[1];
  const Int3 in{s[2], s[3], s[4]};
  const Int3 up{in[0] * factor, in[1] * factor, in[2] * factor};
  Tensor<T> out(Shape{s[0], s[1], up[0], up[1], up[2]});
  const std::int64_t in_vol = vol(in), out_vol = vol(up);
  auto source = [=](std::int64_t z, std::int64_t y, std::int64_t x) {
    return ((z / factor) * in[1] + y / factor) * in[2] + x / factor;
  };
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* xi = input.raw() + p * in_vol;
    T* o = out.raw() + p * out_vol;
    for (std::int64_t z = 0, k = 0; z < up[0]; ++z)
      for (std::int64_t y = 0; y < up[1]; ++y)
        for (std::int64_t x = 0; x < up[2]; ++x, ++k) o[k] = xi[source(z, y, x)];
  }
  if (should_record<T>({&input})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("upsample_nearest3d",
                             [input = input, out, planes, up, in_vol, out_vol, source]() mutable {
                               if (!out.has_grad() || !input.requires_grad()) return;
                               const T* go = out.grad().data();
                               T* gi = input.mutable_grad().data();
                               for (std::int64_t p = 0; p < planes; ++p)
                                 for (std::int64_t z = 0, k = 0; z < up[0]; ++z)
                                   for (std::int64_t y = 0; y < up[1]; ++y)
                                     for (std::int64_t x = 0; x < up[2]; ++x, ++k)
                                       gi[p * in_vol + source(z, y, x)] += go[p * out_vol + k];
                             });
  }
  return out;
}

#define ATTNSEG_INSTANTIATE(T)                                               \
  template Tensor<T> avg_pool3d(const Tensor<T>&, const PoolOptions&);       \
  template Tensor<T> max_pool3d(const Tensor<T>&, const PoolOptions&);       \
  template Tensor<T> upsample_nearest3d(const Tensor<T>&, std::int64_t);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg::ops
