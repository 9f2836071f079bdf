#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnseg/blocks.h"

namespace attnseg {

enum class Attention { none, gated, dual, dual_guided };

std::string to_string(Attention a);
// Throws ConfigError for unknown names.
Attention parse_attention(const std::string& name);
std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

struct ModelConfig {
  std::string backbone = "unet";
  int levels = 3;
  std::vector<std::int64_t> filters{8, 16, 32};
  Attention attention = Attention::none;
  bool multiscale_input = false;
  bool deep_supervision = false;
  std::int64_t classes = 2;
  std::int64_t in_channels = 1;
  // depth, height, width
  std::vector<std::int64_t> input_shape{32, 32, 32};
  int convs_per_block = 1;
  Normalization normalization = Normalization::instance;
  double dropout_rate = 0.5;

  bool operator==(const ModelConfig&) const = default;
};

// 5 levels, [16, 32, 128, 256, 256], 128x128x144 input.
ModelConfig full_scale_model_config();
// 3 levels, [8, 16, 32], 32^3 input.
ModelConfig desk_model_config();

void validate(const ModelConfig& config);

// "UNet-FV", "AGUNet-MS-DS", ...
std::string architecture_name(const ModelConfig& config);

template <typename T>
struct ModelOutput {
  // Coarse to fine; back() is the full-resolution map. One map without deep
  // supervision, `levels` maps with it.
  std::vector<Tensor<T>> maps;
  Tensor<T> afm;
  // Gate coefficients indexed by decoder level (0 = finest); empty unless gated.
  std::vector<Tensor<T>> gate_coefficients;
};

template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& config, std::uint64_t seed = 0);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // input [B, in_channels, D, H, W] with (D, H, W) == config.input_shape.
  ModelOutput<T> forward(const Tensor<T>& input, const ForwardContext& ctx = {}) const;

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& parameters() { return store_; }
  const ParameterStore<T>& parameters() const { return store_; }
  std::int64_t parameter_count() const { return store_.parameter_count(); }
  // Indexed by decoder level; empty unless attention == gated.
  const std::vector<AttentionGate<T>>& gates() const { return gates_; }
  const std::optional<DualAttention<T>>& dual_attention() const { return dual_; }

 private:
  ModelConfig config_;
  ParameterStore<T> store_;
  std::vector<ConvBlock<T>> encoder_;
  std::optional<DualAttention<T>> dual_;
  // Decoder members indexed by level 0..levels-2.
  std::vector<Tensor<T>> up_weight_, up_bias_;
  std::vector<AttentionGate<T>> gates_;
  std::vector<ConvBlock<T>> decoder_;
  DeepSupervisionHeads<T> heads_;
};

}  // namespace attnseg
