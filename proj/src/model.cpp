#include "attnseg/model.h"

#include <algorithm>

#include "attnseg/error.h"

namespace attnseg {

std::string to_string(Attention a) {
  switch (a) {
    case Attention::none: return "none";
    case Attention::gated: return "gated";
    case Attention::dual: return "dual";
    case Attention::dual_guided: return "dual_guided";
  }
  return "none";
}

Attention parse_attention(const std::string& name) {
  for (Attention a : {Attention::none, Attention::gated, Attention::dual, Attention::dual_guided}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("model.attention: unknown value '" + name +
                    "' (expected none, gated, dual, dual_guided)");
}

std::string to_string(Normalization n) { return n == Normalization::instance ? "instance" : "none"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "instance") return Normalization::instance;
  if (name == "none") return Normalization::none;
  throw ConfigError("model.normalization: unknown value '" + name + "' (expected instance, none)");
}

ModelConfig full_scale_model_config() {
  ModelConfig c;
  c.levels = 5;
  c.filters = {16, 32, 128, 256, 256};
  c.input_shape = {128, 128, 144};
  return c;
}

ModelConfig desk_model_config() { return ModelConfig{}; }

void validate(const ModelConfig& c) {
  if (c.backbone != "unet") throw ConfigError("model.backbone: only 'unet' is supported");
  if (c.levels < 1) throw ConfigError("model.levels must be >= 1");
  if (static_cast<int>(c.filters.size()) != c.levels) {
    throw ConfigError("model.filters: expected " + std::to_string(c.levels) + " entries, got " +
                      std::to_string(c.filters.size()));
  }
  for (auto f : c.filters) {
    if (f < 1) throw ConfigError("model.filters: entries must be positive");
  }
  if (c.classes < 2) throw ConfigError("model.classes must be >= 2");
  if (c.in_channels < 1) throw ConfigError("model.in_channels must be >= 1");
  if (c.convs_per_block < 1) throw ConfigError("model.convs_per_block must be >= 1");
  if (c.dropout_rate < 0.0 || c.dropout_rate >= 1.0) {
    throw ConfigError("model.dropout_rate must lie in [0, 1)");
  }
  if (c.input_shape.size() != 3) throw ConfigError("model.input_shape needs 3 entries");
  const std::int64_t div = std::int64_t{1} << (c.levels - 1);
  for (auto d : c.input_shape) {
    if (d < 1 || d % div != 0) {
      throw ConfigError("model.input_shape: " + shape_to_string(c.input_shape) +
                        " is not divisible by 2^(levels-1) = " + std::to_string(div));
    }
  }
}

std::string architecture_name(const ModelConfig& c) {
  std::string name;
  switch (c.attention) {
    case Attention::none: name = "UNet"; break;
    case Attention::gated: name = "AGUNet"; break;
    case Attention::dual: name = "DAUNet"; break;
    case Attention::dual_guided: name = "DAGUNet"; break;
  }
  if (c.multiscale_input) name += "-MS";
  if (c.deep_supervision) name += "-DS";
  if (name == "UNet") name = "UNet-FV";
  return name;
}

namespace {

std::int64_t up_channels(std::int64_t c) { return std::max<std::int64_t>(c / 2, 1); }
std::int64_t decoder_out(const ModelConfig& c, int level) {
  return c.filters[static_cast<std::size_t>(std::max(level - 1, 0))];
}

// k3 s2 p1 with output_padding 1 exactly doubles every spatial dim.
constexpr ops::TransposeConvOptions kUp{{2, 2, 2}, {1, 1, 1}, {1, 1, 1}};
constexpr ops::PoolOptions kDown{{2, 2, 2}, {2, 2, 2}, {0, 0, 0}};

}  // namespace

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), store_(seed) {
  validate(config_);
  const ModelConfig& c = config_;
  const int L = c.levels;
  const bool dual = c.attention == Attention::dual || c.attention == Attention::dual_guided;
  const bool guided = c.attention == Attention::dual_guided;

  // Creation order fixes the parameter enumeration; optional components only
  // insert, never reorder, the shared ones.
  for (int l = 0; l < L; ++l) {
    std::int64_t in = l == 0 ? c.in_channels : c.filters[static_cast<std::size_t>(l - 1)];
    if (l > 0 && c.multiscale_input) in += c.in_channels;
    encoder_.emplace_back(store_, "enc" + std::to_string(l),
                          ConvBlockSpec{in, c.filters[static_cast<std::size_t>(l)], c.convs_per_block,
                                        c.normalization});
  }
  const std::int64_t bottom = c.filters.back();
  if (dual) dual_.emplace(store_, "dual", bottom, c.dropout_rate);

  up_weight_.resize(static_cast<std::size_t>(std::max(L - 1, 0)));
  up_bias_.resize(up_weight_.size());
  decoder_.resize(up_weight_.size());
  if (c.attention == Attention::gated) gates_.resize(up_weight_.size());
  std::int64_t prev = bottom;
  for (int l = L - 2; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    const std::string p = "dec" + std::to_string(l);
    const std::int64_t up = up_channels(prev);
    const std::int64_t skip = c.filters[i];
    up_weight_[i] = store_.he_uniform(p + ".up.weight", {prev, up, 3, 3, 3}, up * 27);
    up_bias_[i] = store_.constant(p + ".up.bias", {up}, T{0});
    if (c.attention == Attention::gated) {
      gates_[i] = AttentionGate<T>(store_, p + ".gate",
                                   AttentionGateSpec{skip, up, std::max<std::int64_t>(skip / 2, 1)});
    }
    const std::int64_t in = skip + up + (guided ? bottom : 0);
    decoder_[i] = ConvBlock<T>(store_, p + ".block",
                               ConvBlockSpec{in, decoder_out(c, l), c.convs_per_block, c.normalization});
    prev = decoder_out(c, l);
  }

  // features: [bottom, dec_{L-2}, ..., dec_0]
  std::vector<std::string> names;
  std::vector<std::int64_t> channels;
  if (c.deep_supervision) {
    names.push_back("head.level" + std::to_string(L - 1));
    channels.push_back(bottom);
    for (int l = L - 2; l >= 0; --l) {
      names.push_back("head.level" + std::to_string(l));
      channels.push_back(decoder_out(c, l));
    }
  } else {
    names.push_back("head.level0");
    channels.push_back(L == 1 ? bottom : decoder_out(c, 0));
  }
  heads_ = DeepSupervisionHeads<T>(store_, names, channels, c.classes);
}

template <typename T>
ModelOutput<T> Model<T>::forward(const Tensor<T>& input, const ForwardContext& ctx) const {
  const ModelConfig& c = config_;
  if (input.ndim() != 5 || input.dim(1) != c.in_channels || input.dim(2) != c.input_shape[0] ||
      input.dim(3) != c.input_shape[1] || input.dim(4) != c.input_shape[2]) {
    throw InputError("model expects [B," + std::to_string(c.in_channels) + "," +
                     std::to_string(c.input_shape[0]) + "," + std::to_string(c.input_shape[1]) + "," +
                     std::to_string(c.input_shape[2]) + "], got " + shape_to_string(input.shape()));
  }
  const int L = c.levels;
  ModelOutput<T> result;
  std::vector<Tensor<T>> scales;
  if (c.multiscale_input && L > 1) scales = multiscale_inputs(input, L);

  std::vector<Tensor<T>> skips;
  Tensor<T> x = input;
  for (int l = 0; l < L; ++l) {
    if (l > 0) {
      x = ops::max_pool3d(x, kDown);
      if (c.multiscale_input) {
        const Tensor<T> parts[] = {x, scales[static_cast<std::size_t>(l - 1)]};
        x = ops::concat_channels<T>(parts);
      }
    }
    x = encoder_[static_cast<std::size_t>(l)].forward(x);
    skips.push_back(x);
  }
  if (dual_) {
    x = dual_->forward(x, ctx);
    result.afm = x;
  }

  std::vector<Tensor<T>> features{x};
  if (!gates_.empty()) result.gate_coefficients.resize(gates_.size());
  for (int l = L - 2; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    const Tensor<T> up = ops::transpose_conv3d(x, up_weight_[i], up_bias_[i], kUp);
    Tensor<T> skip = skips[i];
    if (!gates_.empty()) skip = gates_[i].forward(skip, up, &result.gate_coefficients[i]);
    std::vector<Tensor<T>> parts{skip, up};
    if (c.attention == Attention::dual_guided) {
      parts.push_back(ops::upsample_nearest3d(result.afm, std::int64_t{1} << (L - 1 - l)));
    }
    x = decoder_[i].forward(ops::concat_channels<T>(parts));
    features.push_back(x);
  }
  if (!c.deep_supervision) features = {features.back()};
  result.maps = heads_.forward(features);
  return result;
}

template class Model<float>;
template class Model<double>;

}  // namespace attnseg
