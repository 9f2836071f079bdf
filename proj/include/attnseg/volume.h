#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace attnseg {

// (depth, height, width) = (z, y, x); linear index (z * H + y) * W + x.
using Dims = std::array<std::int64_t, 3>;

struct Volume {
  std::string id;
  Dims dims{0, 0, 0};
  // (sx, sy, sz) in mm; sx pairs with dims[2], sz with dims[0].
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<float> data;
  // Binary annotation; empty when absent.
  std::vector<std::uint8_t> label;

  std::int64_t voxels() const { return dims[0] * dims[1] * dims[2]; }
  bool has_label() const { return !label.empty(); }
  // Spacing along dims[axis].
  double axis_spacing(int axis) const { return spacing[static_cast<std::size_t>(2 - axis)]; }
  double voxel_ml() const { return spacing[0] * spacing[1] * spacing[2] / 1000.0; }
  std::int64_t index(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return (z * dims[1] + y) * dims[2] + x;
  }
};

std::int64_t dims_voxels(const Dims& d);
std::string dims_to_string(const Dims& d);

// Throws InputError on inconsistent sizes or non-positive spacing.
void validate(const Volume& v);

std::int64_t label_count(const Volume& v);
double label_volume_ml(const Volume& v);

}  // namespace attnseg
