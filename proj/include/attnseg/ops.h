#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "attnseg/random.h"
#include "attnseg/tensor.h"

// Differentiable tensor operations. Every op records its backward rule on
// the active Tape when any input requires a gradient; otherwise it is a
// plain forward computation.
namespace attnseg::ops {

using Int3 = std::array<std::int64_t, 3>;

struct ConvOptions {
  Int3 stride{1, 1, 1};
  Int3 padding{0, 0, 0};
};

struct TransposeConvOptions {
  Int3 stride{1, 1, 1};
  Int3 padding{0, 0, 0};
  // Extra trailing extent on each axis; must be smaller than the stride.
  Int3 output_padding{0, 0, 0};
};

struct PoolOptions {
  Int3 kernel{2, 2, 2};
  Int3 stride{2, 2, 2};
  Int3 padding{0, 0, 0};
};

Int3 conv_output_dims(const Int3& in, const Int3& kernel, const ConvOptions& opt);
Int3 transpose_conv_output_dims(const Int3& in, const Int3& kernel,
                                const TransposeConvOptions& opt);

// input [B,Cin,D,H,W], kernel [Cout,Cin,kd,kh,kw], bias [Cout] or undefined.
template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 const ConvOptions& opt = {});

// input [B,Cin,D,H,W], kernel [Cin,Cout,kd,kh,kw] (the adjoint of conv3d with
// the same buffer), bias [Cout] or undefined.
template <typename T>
Tensor<T> transpose_conv3d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                           const TransposeConvOptions& opt = {});

// Mean over the in-bounds part of each window (padding is not counted).
template <typename T>
Tensor<T> avg_pool3d(const Tensor<T>& input, const PoolOptions& opt);

// Gradient routed to the first maximal element in window scan order.
template <typename T>
Tensor<T> max_pool3d(const Tensor<T>& input, const PoolOptions& opt);

template <typename T>
Tensor<T> upsample_nearest3d(const Tensor<T>& input, std::int64_t factor);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
// Softmax across axis 1 independently at every other index.
template <typename T>
Tensor<T> softmax_channel(const Tensor<T>& x);
// Softmax across the last axis.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

// a [B,M,K] (or [B,K,M] with transpose_a), b [B,K,N] (or [B,N,K]) -> [B,M,N].
template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false,
                         bool transpose_b = false);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
// factor is a learnable single-element tensor.
template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& factor);
// x [B,C,...] times a [B,1,...] broadcast over channels.
template <typename T>
Tensor<T> mul_channel_broadcast(const Tensor<T>& x, const Tensor<T>& a);
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
// Weighted sum of a list of scalars.
template <typename T>
Tensor<T> weighted_sum(std::span<const Tensor<T>> scalars, std::span<const T> weights);

// Zeroes whole channels with probability `rate` and rescales survivors by
// 1/(1-rate). Identity (the same tensor) when !training or rate == 0.
template <typename T>
Tensor<T> spatial_dropout(const Tensor<T>& x, double rate, bool training, Rng& rng);

// Per-sample, per-channel normalization over the spatial axes. gamma/beta
// are [C] or undefined (no affine).
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        T eps = T(1e-5));

}  // namespace attnseg::ops
