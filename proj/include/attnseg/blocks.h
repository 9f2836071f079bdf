#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "attnseg/ops.h"
#include "attnseg/random.h"
#include "attnseg/tensor.h"

namespace attnseg {

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> value;
};

// Owns every trainable tensor of a model in creation order. Each parameter
// draws its initial values from a stream keyed by (seed, name), so a
// parameter shared by two architecture variants starts identical in both
// regardless of what else the variants contain.
template <typename T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  // He-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  Tensor<T> he_uniform(const std::string& name, Shape shape, std::int64_t fan_in);
  Tensor<T> constant(const std::string& name, Shape shape, T value);

  const std::vector<NamedParameter<T>>& entries() const { return entries_; }
  // Undefined tensor when absent.
  Tensor<T> find(std::string_view name) const;
  std::int64_t parameter_count() const;
  void zero_grad();

 private:
  Tensor<T>& add(const std::string& name, Tensor<T> value);
  std::uint64_t seed_;
  std::vector<NamedParameter<T>> entries_;
};

struct ForwardContext {
  bool training = false;
  // Required when training with dropout.
  Rng* rng = nullptr;
};

enum class Normalization { instance, none };

struct ConvBlockSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  int convs_per_block = 2;
  Normalization normalization = Normalization::instance;
};

// convs_per_block x (3x3x3 conv, padding 1, normalization, relu).
template <typename T>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(ParameterStore<T>& store, const std::string& prefix, const ConvBlockSpec& spec);

  Tensor<T> forward(const Tensor<T>& x) const;
  const ConvBlockSpec& spec() const { return spec_; }

 private:
  struct Layer {
    Tensor<T> weight, bias, gamma, beta;
  };
  ConvBlockSpec spec_;
  std::vector<Layer> layers_;
};

struct AttentionGateSpec {
  std::int64_t skip_channels = 1;
  std::int64_t gating_channels = 1;
  std::int64_t inter_channels = 1;
};

// alpha = sigmoid(psi(relu(W_x skip + W_g gating + b))) and skip * alpha.
// The gating signal must already be resampled to the skip resolution.
template <typename T>
class AttentionGate {
 public:
  AttentionGate() = default;
  AttentionGate(ParameterStore<T>& store, const std::string& prefix, const AttentionGateSpec& spec);

  // coefficients, when given, receives alpha [B,1,D,H,W].
  Tensor<T> forward(const Tensor<T>& skip, const Tensor<T>& gating,
                    Tensor<T>* coefficients = nullptr) const;
  const AttentionGateSpec& spec() const { return spec_; }
  Tensor<T> psi_bias() const { return psi_bias_; }

 private:
  AttentionGateSpec spec_;
  Tensor<T> wx_, wg_, wg_bias_, psi_, psi_bias_;
};

// Spatial self-attention over all N = D*H*W positions with a zero-initialized
// residual scale.
template <typename T>
class PositionAttention {
 public:
  static constexpr std::int64_t kReduction = 8;

  PositionAttention() = default;
  PositionAttention(ParameterStore<T>& store, const std::string& prefix, std::int64_t channels);

  // affinity, when given, receives the row-stochastic [B,N,N] map.
  Tensor<T> forward(const Tensor<T>& x, Tensor<T>* affinity = nullptr) const;
  Tensor<T> gamma() const { return gamma_; }

 private:
  std::int64_t channels_ = 0;
  Tensor<T> wq_, bq_, wk_, bk_, wv_, bv_, gamma_;
};

// Channel self-attention: C x C affinity from the raw reshaped features.
template <typename T>
class ChannelAttention {
 public:
  ChannelAttention() = default;
  ChannelAttention(ParameterStore<T>& store, const std::string& prefix);

  Tensor<T> forward(const Tensor<T>& x, Tensor<T>* affinity = nullptr) const;
  Tensor<T> gamma() const { return gamma_; }

 private:
  Tensor<T> gamma_;
};

// AFM = conv1x1(spatial_dropout(PAM(x) + CAM(x))).
template <typename T>
class DualAttention {
 public:
  DualAttention() = default;
  DualAttention(ParameterStore<T>& store, const std::string& prefix, std::int64_t channels,
                double dropout_rate);

  Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) const;
  const PositionAttention<T>& position() const { return pam_; }
  const ChannelAttention<T>& channel() const { return cam_; }
  Tensor<T> projection_weight() const { return w_; }
  Tensor<T> projection_bias() const { return b_; }

 private:
  PositionAttention<T> pam_;
  ChannelAttention<T> cam_;
  Tensor<T> w_, b_;
  double dropout_rate_ = 0.5;
};

// levels-1 successively halved copies (3x3x3 average pooling, stride 2,
// padding 1), finest first.
template <typename T>
std::vector<Tensor<T>> multiscale_inputs(const Tensor<T>& volume, int levels);

// One 1x1x1 conv + channel softmax per decoder level.
template <typename T>
class DeepSupervisionHeads {
 public:
  DeepSupervisionHeads() = default;
  // channels[i] and names[i] describe the i-th feature map passed to forward().
  DeepSupervisionHeads(ParameterStore<T>& store, const std::vector<std::string>& names,
                       const std::vector<std::int64_t>& channels, std::int64_t classes);

  std::vector<Tensor<T>> forward(std::span<const Tensor<T>> features) const;
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<Tensor<T>> weights_, biases_;
};

}  // namespace attnseg
