#include <Eigen/Core>
#include <algorithm>
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

std::int64_t volume(const Int3& d) { return d[0] * d[1] * d[2]; }

Int3 spatial_of(const Shape& s) { return {s[2], s[3], s[4]}; }

// Geometry of one convolution: the "image" side (conv input) and the
// "column" side (conv output positions).
struct ConvGeometry {
  std::int64_t channels;
  Int3 image;
  Int3 kernel;
  Int3 stride;
  Int3 padding;
  Int3 out;
};

// col[(c*K + kk), p] = image[c, p*stride - pad + kk], zero outside.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const auto [D, H, W] = g.image;
  const auto [kd, kh, kw] = g.kernel;
  const auto [Do, Ho, Wo] = g.out;
  const std::int64_t P = Do * Ho * Wo;
  for (std::int64_t c = 0; c < g.channels; ++c) {
    const T* img = image + c * D * H * W;
    for (std::int64_t a = 0; a < kd; ++a) {
      for (std::int64_t b = 0; b < kh; ++b) {
        for (std::int64_t e = 0; e < kw; ++e) {
          T* row = col + (((c * kd + a) * kh + b) * kw + e) * P;
          for (std::int64_t od = 0; od < Do; ++od) {
            const std::int64_t id = od * g.stride[0] - g.padding[0] + a;
            T* rd = row + od * Ho * Wo;
            if (id < 0 || id >= D) {
              std::fill(rd, rd + Ho * Wo, T{0});
              continue;
            }
            for (std::int64_t oh = 0; oh < Ho; ++oh) {
              const std::int64_t ih = oh * g.stride[1] - g.padding[1] + b;
              T* rh = rd + oh * Wo;
              if (ih < 0 || ih >= H) {
                std::fill(rh, rh + Wo, T{0});
                continue;
              }
              const T* src = img + (id * H + ih) * W;
              if (g.stride[2] == 1) {
                const std::int64_t lo = std::min<std::int64_t>(Wo, std::max<std::int64_t>(0, g.padding[2] - e));
                const std::int64_t hi = std::min<std::int64_t>(Wo, W + g.padding[2] - e);
                std::fill(rh, rh + lo, T{0});
                for (std::int64_t ow = lo; ow < hi; ++ow) rh[ow] = src[ow - g.padding[2] + e];
                if (hi < Wo) std::fill(rh + std::max(hi, lo), rh + Wo, T{0});
              } else {
                for (std::int64_t ow = 0; ow < Wo; ++ow) {
                  const std::int64_t iw = ow * g.stride[2] - g.padding[2] + e;
                  rh[ow] = (iw >= 0 && iw < W) ? src[iw] : T{0};
                }
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: image[c, p*stride - pad + kk] += col[(c*K + kk), p].
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const auto [D, H, W] = g.image;
  const auto [kd, kh, kw] = g.kernel;
  const auto [Do, Ho, Wo] = g.out;
  const std::int64_t P = Do * Ho * Wo;
  for (std::int64_t c = 0; c < g.channels; ++c) {
    T* img = image + c * D * H * W;
    for (std::int64_t a = 0; a < kd; ++a) {
      for (std::int64_t b = 0; b < kh; ++b) {
        for (std::int64_t e = 0; e < kw; ++e) {
          const T* row = col + (((c * kd + a) * kh + b) * kw + e) * P;
          for (std::int64_t od = 0; od < Do; ++od) {
            const std::int64_t id = od * g.stride[0] - g.padding[0] + a;
            if (id < 0 || id >= D) continue;
            for (std::int64_t oh = 0; oh < Ho; ++oh) {
              const std::int64_t ih = oh * g.stride[1] - g.padding[1] + b;
              if (ih < 0 || ih >= H) continue;
              T* dst = img + (id * H + ih) * W;
              const T* rh = row + (od * Ho + oh) * Wo;
              for (std::int64_t ow = 0; ow < Wo; ++ow) {
                const std::int64_t iw = ow * g.stride[2] - g.padding[2] + e;
                if (iw >= 0 && iw < W) dst[iw] += rh[ow];
              }
            }
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel == Int3{1, 1, 1} && g.stride == Int3{1, 1, 1} && g.padding == Int3{0, 0, 0};
}

template <typename T>
void check_5d(const Tensor<T>& t, const char* what) {
  if (!t.defined() || t.ndim() != 5) {
    throw InputError(std::string(what) + " must be a 5-D tensor [B,C,D,H,W]");
  }
}

template <typename T>
void add_bias(const Tensor<T>& bias, std::int64_t channels, std::int64_t spatial, T* out) {
  if (!bias.defined()) return;
  for (std::int64_t c = 0; c < channels; ++c) {
    const T v = bias[c];
    T* o = out + c * spatial;
    for (std::int64_t i = 0; i < spatial; ++i) o[i] += v;
  }
}

template <typename T>
void accumulate_bias_grad(Tensor<T>& bias, const T* g, std::int64_t batch, std::int64_t channels,
                          std::int64_t spatial) {
  auto db = bias.mutable_grad();
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const T* gp = g + (b * channels + c) * spatial;
      T s{0};
      for (std::int64_t i = 0; i < spatial; ++i) s += gp[i];
      db[static_cast<std::size_t>(c)] += s;
    }
  }
}

}  // namespace

Int3 conv_output_dims(const Int3& in, const Int3& kernel, const ConvOptions& opt) {
  Int3 out{};
  for (int i = 0; i < 3; ++i) {
    if (opt.stride[i] < 1) throw InputError("conv3d stride must be >= 1");
    if (opt.padding[i] < 0) throw InputError("conv3d padding must be >= 0");
    if (in[i] + 2 * opt.padding[i] < kernel[i]) {
      throw InputError("conv3d kernel larger than padded input on axis " + std::to_string(i));
    }
    out[i] = (in[i] + 2 * opt.padding[i] - kernel[i]) / opt.stride[i] + 1;
  }
  return out;
}

Int3 transpose_conv_output_dims(const Int3& in, const Int3& kernel,
                                const TransposeConvOptions& opt) {
  Int3 out{};
  for (int i = 0; i < 3; ++i) {
    if (opt.stride[i] < 1) throw InputError("transpose_conv3d stride must be >= 1");
    if (opt.output_padding[i] < 0 || opt.output_padding[i] >= opt.stride[i]) {
      throw InputError("transpose_conv3d output_padding must lie in [0, stride)");
    }
    out[i] = (in[i] - 1) * opt.stride[i] - 2 * opt.padding[i] + kernel[i] + opt.output_padding[i];
    if (out[i] < 1) throw InputError("transpose_conv3d produces an empty output");
  }
  return out;
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 const ConvOptions& opt) {
  check_5d(input, "conv3d input");
  check_5d(kernel, "conv3d kernel");
  const auto& xs = input.shape();
  const auto& ks = kernel.shape();
  if (xs[1] != ks[1]) {
    throw ConfigError("conv3d channel mismatch: input has " + std::to_string(xs[1]) +
                      " channels, kernel expects " + std::to_string(ks[1]));
  }
  const std::int64_t B = xs[0], Cin = xs[1], Cout = ks[0];
  if (bias.defined() && bias.numel() != Cout) throw ConfigError("conv3d bias size mismatch");
  const Int3 kdims{ks[2], ks[3], ks[4]};
  const ConvGeometry geo{Cin, spatial_of(xs), kdims, opt.stride, opt.padding,
                         conv_output_dims(spatial_of(xs), kdims, opt)};
  const std::int64_t K = Cin * volume(kdims);
  const std::int64_t P = volume(geo.out);
  const std::int64_t in_vol = volume(geo.image);
  const bool pointwise = is_pointwise(geo);

  Tensor<T> out(Shape{B, Cout, geo.out[0], geo.out[1], geo.out[2]});
  CMapR<T> w(kernel.raw(), Cout, K);
  std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(K * P));
  for (std::int64_t b = 0; b < B; ++b) {
    const T* x = input.raw() + b * Cin * in_vol;
    MapR<T> o(out.raw() + b * Cout * P, Cout, P);
    if (pointwise) {
      o.noalias() = w * CMapR<T>(x, K, P);
    } else {
      im2col(x, geo, col.data());
      o.noalias() = w * CMapR<T>(col.data(), K, P);
    }
    add_bias(bias, Cout, P, o.data());
  }

  if (should_record<T>({&input, &kernel, &bias})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("conv3d", [input = input, kernel = kernel, bias = bias, out, geo, B, Cin, Cout, K, P, in_vol,
                                        pointwise]() mutable {
      if (!out.has_grad()) return;
      const T* gout = out.grad().data();
      CMapR<T> w(kernel.raw(), Cout, K);
      std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(K * P));
      std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(K * P));
      T* dx_all = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      T* dw_all = kernel.requires_grad() ? kernel.mutable_grad().data() : nullptr;
      for (std::int64_t b = 0; b < B; ++b) {
        CMapR<T> g(gout + b * Cout * P, Cout, P);
        const T* x = input.raw() + b * Cin * in_vol;
        if (dw_all) {
          MapR<T> dw(dw_all, Cout, K);
          if (pointwise) {
            dw.noalias() += g * CMapR<T>(x, K, P).transpose();
          } else {
            im2col(x, geo, col.data());
            dw.noalias() += g * CMapR<T>(col.data(), K, P).transpose();
          }
        }
        if (dx_all) {
          T* dx = dx_all + b * Cin * in_vol;
          if (pointwise) {
            MapR<T>(dx, K, P).noalias() += w.transpose() * g;
          } else {
            MapR<T>(dcol.data(), K, P).noalias() = w.transpose() * g;
            col2im(dcol.data(), geo, dx);
          }
        }
      }
      if (bias.defined() && bias.requires_grad()) accumulate_bias_grad(bias, gout, B, Cout, P);
    });
  }
  return out;
}

template <typename T>
Tensor<T> transpose_conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           const TransposeConvOptions& opt) {
  check_5d(input, "transpose_conv3d input");
  check_5d(kernel, "transpose_conv3d kernel");
  const auto& xs = input.shape();
  const auto& ks = kernel.shape();
  if (xs[1] != ks[0]) {
    throw ConfigError("transpose_conv3d channel mismatch: input has " + std::to_string(xs[1]) +
                      " channels, kernel expects " + std::to_string(ks[0]));
  }
  const std::int64_t B = xs[0], Cin = xs[1], Cout = ks[1];
  if (bias.defined() && bias.numel() != Cout) {
    throw ConfigError("transpose_conv3d bias size mismatch");
  }
  const Int3 kdims{ks[2], ks[3], ks[4]};
  const Int3 in_dims = spatial_of(xs);
  const Int3 out_dims = transpose_conv_output_dims(in_dims, kdims, opt);
  // The conv whose input-gradient this op computes: image = our output,
  // columns = our input positions.
  const ConvGeometry geo{Cout, out_dims, kdims, opt.stride, opt.padding, in_dims};
  const std::int64_t K = Cout * volume(kdims);
  const std::int64_t P = volume(in_dims);
  const std::int64_t out_vol = volume(out_dims);

  Tensor<T> out(Shape{B, Cout, out_dims[0], out_dims[1], out_dims[2]});
  CMapR<T> w(kernel.raw(), Cin, K);
  std::vector<T> col(static_cast<std::size_t>(K * P));
  for (std::int64_t b = 0; b < B; ++b) {
    CMapR<T> x(input.raw() + b * Cin * P, Cin, P);
    MapR<T>(col.data(), K, P).noalias() = w.transpose() * x;
    T* o = out.raw() + b * Cout * out_vol;
    col2im(col.data(), geo, o);
    add_bias(bias, Cout, out_vol, o);
  }

  if (should_record<T>({&input, &kernel, &bias})) {
    out.set_requires_grad(true);
    active_tape<T>()->record("transpose_conv3d", [input = input, kernel = kernel, bias = bias, out, geo, B, Cin, Cout, K, P,
                                                  out_vol]() mutable {
      if (!out.has_grad()) return;
      const T* gout = out.grad().data();
      CMapR<T> w(kernel.raw(), Cin, K);
      std::vector<T> gcol(static_cast<std::size_t>(K * P));
      T* dx_all = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      T* dw_all = kernel.requires_grad() ? kernel.mutable_grad().data() : nullptr;
      for (std::int64_t b = 0; b < B; ++b) {
        im2col(gout + b * Cout * out_vol, geo, gcol.data());
        CMapR<T> gc(gcol.data(), K, P);
        if (dx_all) MapR<T>(dx_all + b * Cin * P, Cin, P).noalias() += w * gc;
        if (dw_all) {
          CMapR<T> x(input.raw() + b * Cin * P, Cin, P);
          MapR<T>(dw_all, Cin, K).noalias() += x * gc.transpose();
        }
      }
      if (bias.defined() && bias.requires_grad()) {
        accumulate_bias_grad(bias, gout, B, Cout, out_vol);
      }
    });
  }
  return out;
}

template Tensor<float> conv3d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              const ConvOptions&);
template Tensor<double> conv3d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&, const ConvOptions&);
template Tensor<float> transpose_conv3d(const Tensor<float>&, const Tensor<float>&,
                                        const Tensor<float>&, const TransposeConvOptions&);
template Tensor<double> transpose_conv3d(const Tensor<double>&, const Tensor<double>&,
                                         const Tensor<double>&, const TransposeConvOptions&);

}  // namespace attnseg::ops
