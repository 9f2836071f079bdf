#include "attnseg/blocks.h"

#include <cmath>

#include "attnseg/error.h"

namespace attnseg {

template <typename T>
Tensor<T>& ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  if (find(name).defined()) throw ConfigError("duplicate parameter name " + name);
  value.set_requires_grad(true);
  entries_.push_back({name, std::move(value)});
  return entries_.back().value;
}

template <typename T>
Tensor<T> ParameterStore<T>::he_uniform(const std::string& name, Shape shape, std::int64_t fan_in) {
  Tensor<T> t(std::move(shape));
  Rng rng(mix_seed(seed_, fnv1a(name)));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<T>(uniform(rng, -bound, bound));
  return add(name, std::move(t));
}

template <typename T>
Tensor<T> ParameterStore<T>::constant(const std::string& name, Shape shape, T value) {
  return add(name, Tensor<T>(std::move(shape), value));
}

template <typename T>
Tensor<T> ParameterStore<T>::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  return {};
}

template <typename T>
std::int64_t ParameterStore<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) {
    Tensor<T> v = e.value;
    v.zero_grad();
  }
}

namespace {

constexpr ops::ConvOptions kSame3{{1, 1, 1}, {1, 1, 1}};

template <typename T>
Tensor<T> pointwise(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return ops::conv3d(x, w, b, {});
}

Shape pointwise_shape(std::int64_t out, std::int64_t in) { return {out, in, 1, 1, 1}; }

}  // namespace

template <typename T>
ConvBlock<T>::ConvBlock(ParameterStore<T>& store, const std::string& prefix,
                        const ConvBlockSpec& spec)
    : spec_(spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.convs_per_block < 1) {
    throw ConfigError(prefix + ": conv block needs positive channels and convs_per_block >= 1");
  }
  std::int64_t in = spec.in_channels;
  for (int i = 0; i < spec.convs_per_block; ++i) {
    const std::string p = prefix + ".conv" + std::to_string(i);
    Layer layer;
    layer.weight = store.he_uniform(p + ".weight", {spec.out_channels, in, 3, 3, 3}, in * 27);
    if (spec.normalization == Normalization::instance) {
      // The conv bias would be cancelled by the normalization.
      layer.gamma = store.constant(p + ".norm.gamma", {spec.out_channels}, T{1});
      layer.beta = store.constant(p + ".norm.beta", {spec.out_channels}, T{0});
    } else {
      layer.bias = store.constant(p + ".bias", {spec.out_channels}, T{0});
    }
    layers_.push_back(layer);
    in = spec.out_channels;
  }
}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& x) const {
  if (x.ndim() != 5 || x.dim(1) != spec_.in_channels) {
    throw ConfigError("conv block expects " + std::to_string(spec_.in_channels) +
                      " input channels, got shape " + shape_to_string(x.shape()));
  }
  Tensor<T> y = x;
  for (const auto& layer : layers_) {
    y = ops::conv3d(y, layer.weight, layer.bias, kSame3);
    if (spec_.normalization == Normalization::instance) {
      y = ops::instance_norm(y, layer.gamma, layer.beta);
    }
    y = ops::relu(y);
  }
  return y;
}

template <typename T>
AttentionGate<T>::AttentionGate(ParameterStore<T>& store, const std::string& prefix,
                                const AttentionGateSpec& spec)
    : spec_(spec) {
  if (spec.skip_channels < 1 || spec.gating_channels < 1 || spec.inter_channels < 1) {
    throw ConfigError(prefix + ": attention gate channels must be positive");
  }
  wx_ = store.he_uniform(prefix + ".wx.weight", pointwise_shape(spec.inter_channels, spec.skip_channels),
                         spec.skip_channels);
  wg_ = store.he_uniform(prefix + ".wg.weight",
                         pointwise_shape(spec.inter_channels, spec.gating_channels),
                         spec.gating_channels);
  wg_bias_ = store.constant(prefix + ".wg.bias", {spec.inter_channels}, T{0});
  psi_ = store.he_uniform(prefix + ".psi.weight", pointwise_shape(1, spec.inter_channels),
                          spec.inter_channels);
  psi_bias_ = store.constant(prefix + ".psi.bias", {1}, T{0});
}

template <typename T>
Tensor<T> AttentionGate<T>::forward(const Tensor<T>& skip, const Tensor<T>& gating,
                                    Tensor<T>* coefficients) const {
  if (skip.ndim() != 5 || gating.ndim() != 5 || skip.dim(0) != gating.dim(0) ||
      skip.dim(2) != gating.dim(2) || skip.dim(3) != gating.dim(3) || skip.dim(4) != gating.dim(4)) {
    throw ConfigError("attention gate: skip " + shape_to_string(skip.shape()) +
                      " and gating " + shape_to_string(gating.shape()) + " are not aligned");
  }
  const Tensor<T> joined = ops::add(pointwise(skip, wx_, Tensor<T>{}), pointwise(gating, wg_, wg_bias_));
  const Tensor<T> alpha = ops::sigmoid(pointwise(ops::relu(joined), psi_, psi_bias_));
  if (coefficients) *coefficients = alpha;
  return ops::mul_channel_broadcast(skip, alpha);
}

template <typename T>
PositionAttention<T>::PositionAttention(ParameterStore<T>& store, const std::string& prefix,
                                        std::int64_t channels)
    : channels_(channels) {
  const std::int64_t reduced = std::max<std::int64_t>(1, channels / kReduction);
  wq_ = store.he_uniform(prefix + ".query.weight", pointwise_shape(reduced, channels), channels);
  bq_ = store.constant(prefix + ".query.bias", {reduced}, T{0});
  wk_ = store.he_uniform(prefix + ".key.weight", pointwise_shape(reduced, channels), channels);
  bk_ = store.constant(prefix + ".key.bias", {reduced}, T{0});
  wv_ = store.he_uniform(prefix + ".value.weight", pointwise_shape(channels, channels), channels);
  bv_ = store.constant(prefix + ".value.bias", {channels}, T{0});
  gamma_ = store.constant(prefix + ".gamma", {1}, T{0});
}

template <typename T>
Tensor<T> PositionAttention<T>::forward(const Tensor<T>& x, Tensor<T>* affinity) const {
  if (x.ndim() != 5 || x.dim(1) != channels_) {
    throw ConfigError("position attention expects " + std::to_string(channels_) +
                      " channels, got " + shape_to_string(x.shape()));
  }
  const std::int64_t B = x.dim(0), N = x.dim(2) * x.dim(3) * x.dim(4);
  const std::int64_t reduced = wq_.dim(0);
  const Tensor<T> q = ops::reshape(pointwise(x, wq_, bq_), {B, reduced, N});
  const Tensor<T> k = ops::reshape(pointwise(x, wk_, bk_), {B, reduced, N});
  const Tensor<T> v = ops::reshape(pointwise(x, wv_, bv_), {B, channels_, N});
  const Tensor<T> attn = ops::softmax_lastdim(ops::matmul_batched(q, k, true, false));
  if (affinity) *affinity = attn;
  // out[c, i] = sum_j v[c, j] * attn[i, j]
  const Tensor<T> out = ops::reshape(ops::matmul_batched(v, attn, false, true), x.shape());
  return ops::add(ops::scale_by(out, gamma_), x);
}

template <typename T>
ChannelAttention<T>::ChannelAttention(ParameterStore<T>& store, const std::string& prefix) {
  gamma_ = store.constant(prefix + ".gamma", {1}, T{0});
}

template <typename T>
Tensor<T> ChannelAttention<T>::forward(const Tensor<T>& x, Tensor<T>* affinity) const {
  if (x.ndim() != 5) throw InputError("channel attention expects a 5-D tensor");
  const std::int64_t B = x.dim(0), C = x.dim(1), N = x.dim(2) * x.dim(3) * x.dim(4);
  const Tensor<T> flat = ops::reshape(x, {B, C, N});
  const Tensor<T> attn = ops::softmax_lastdim(ops::matmul_batched(flat, flat, false, true));
  if (affinity) *affinity = attn;
  const Tensor<T> out = ops::reshape(ops::matmul_batched(attn, flat), x.shape());
  return ops::add(ops::scale_by(out, gamma_), x);
}

template <typename T>
DualAttention<T>::DualAttention(ParameterStore<T>& store, const std::string& prefix,
                                std::int64_t channels, double dropout_rate)
    : pam_(store, prefix + ".pam", channels),
      cam_(store, prefix + ".cam"),
      dropout_rate_(dropout_rate) {
  w_ = store.he_uniform(prefix + ".proj.weight", pointwise_shape(channels, channels), channels);
  b_ = store.constant(prefix + ".proj.bias", {channels}, T{0});
}

template <typename T>
Tensor<T> DualAttention<T>::forward(const Tensor<T>& x, const ForwardContext& ctx) const {
  Tensor<T> fused = ops::add(pam_.forward(x), cam_.forward(x));
  if (ctx.training && dropout_rate_ > 0.0) {
    if (ctx.rng == nullptr) throw ConfigError("training forward pass needs an RNG for dropout");
    fused = ops::spatial_dropout(fused, dropout_rate_, true, *ctx.rng);
  }
  return pointwise(fused, w_, b_);
}

template <typename T>
std::vector<Tensor<T>> multiscale_inputs(const Tensor<T>& volume, int levels) {
  if (levels < 1) throw ConfigError("multiscale_inputs needs levels >= 1");
  if (volume.ndim() != 5) throw InputError("multiscale_inputs expects [B,C,D,H,W]");
  const std::int64_t needed = std::int64_t{1} << (levels - 1);
  for (int axis = 2; axis < 5; ++axis) {
    if (volume.dim(axis) < needed) {
      throw ConfigError("volume " + shape_to_string(volume.shape()) + " too small to halve " +
                        std::to_string(levels - 1) + " times");
    }
  }
  const ops::PoolOptions pool{{3, 3, 3}, {2, 2, 2}, {1, 1, 1}};
  std::vector<Tensor<T>> scales;
  Tensor<T> current = volume;
  for (int l = 1; l < levels; ++l) {
    current = ops::avg_pool3d(current, pool);
    scales.push_back(current);
  }
  return scales;
}

template <typename T>
DeepSupervisionHeads<T>::DeepSupervisionHeads(ParameterStore<T>& store,
                                              const std::vector<std::string>& names,
                                              const std::vector<std::int64_t>& channels,
                                              std::int64_t classes) {
  if (names.size() != channels.size()) throw ConfigError("head names/channels length mismatch");
  for (std::size_t i = 0; i < names.size(); ++i) {
    weights_.push_back(
        store.he_uniform(names[i] + ".weight", pointwise_shape(classes, channels[i]), channels[i]));
    biases_.push_back(store.constant(names[i] + ".bias", {classes}, T{0}));
  }
}

template <typename T>
std::vector<Tensor<T>> DeepSupervisionHeads<T>::forward(std::span<const Tensor<T>> features) const {
  if (features.size() != weights_.size()) {
    throw ConfigError("deep supervision expects " + std::to_string(weights_.size()) +
                      " feature maps, got " + std::to_string(features.size()));
  }
  std::vector<Tensor<T>> maps;
  for (std::size_t i = 0; i < features.size(); ++i) {
    maps.push_back(ops::softmax_channel(pointwise(features[i], weights_[i], biases_[i])));
  }
  return maps;
}

#define ATTNSEG_INSTANTIATE(T)                                                        \
  template class ParameterStore<T>;                                                   \
  template class ConvBlock<T>;                                                        \
  template class AttentionGate<T>;                                                    \
  template class PositionAttention<T>;                                                \
  template class ChannelAttention<T>;                                                 \
  template class DualAttention<T>;                                                    \
  template class DeepSupervisionHeads<T>;                                             \
  template std::vector<Tensor<T>> multiscale_inputs(const Tensor<T>&, int);

ATTNSEG_INSTANTIATE(float)
ATTNSEG_INSTANTIATE(double)
#undef ATTNSEG_INSTANTIATE

}  // namespace attnseg
