#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attnseg/volume.h"

namespace attnseg {

struct ComponentLabeling {
  Dims dims{0, 0, 0};
  // 0 = background, otherwise 1..count numbered by first voxel in scan order.
  std::vector<std::int32_t> labels;
  int count = 0;
  // sizes[k] is the voxel count of label k + 1.
  std::vector<std::int64_t> sizes;
};

// connectivity is 6, 18 or 26.
ComponentLabeling connected_components(std::span<const std::uint8_t> mask, const Dims& dims,
                                       int connectivity = 26);

double component_volume_ml(const ComponentLabeling& c, int label, double voxel_ml);

// Mask of the largest component (lowest label on ties); empty labeling gives
// an all-zero mask.
std::vector<std::uint8_t> largest_component(const ComponentLabeling& c);

}  // namespace attnseg
