#pragma once

#include <memory>
#include <string>

#include "attnseg/model.h"

namespace attnseg {

// Layout (little-endian):
//   "ATSGCKPT" | u32 version | u32 scalar bytes | u64 n | n bytes config JSON
//   | u64 parameter count | per parameter: u32 name length, name, u32 ndim,
//   ndim x i64 dims, raw values | u32 crc32 of everything before it.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

// Reads the embedded model configuration after verifying the checksum.
ModelConfig read_checkpoint_config(const std::string& path);

// Builds a model from the embedded configuration and loads its weights.
template <typename T>
std::unique_ptr<Model<T>> load_checkpoint(const std::string& path);

// Loads into an existing model; a configuration mismatch raises ConfigError
// naming every differing field.
template <typename T>
void load_weights(Model<T>& model, const std::string& path);

}  // namespace attnseg
