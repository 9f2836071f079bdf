#pragma once

#include <span>
#include <vector>

#include "attnseg/volume.h"

namespace attnseg {

struct PreprocessOptions {
  // Head mask: voxels above this fraction of the maximum intensity.
  double head_threshold = 0.02;
  std::int64_t margin = 2;
};

// Every geometric step of preprocess(), enough to map a network-space map
// back onto the original grid.
struct PreprocessRecord {
  Dims original_dims{0, 0, 0};
  std::array<double, 3> original_spacing{1, 1, 1};
  Dims resampled_dims{0, 0, 0};  // 1 mm grid
  Dims crop_origin{0, 0, 0};     // in the 1 mm grid
  Dims crop_dims{0, 0, 0};
  Dims target_dims{0, 0, 0};
  float intensity_min = 0;
  float intensity_max = 0;
};

struct Preprocessed {
  // target_dims grid, intensities in [0, 1]; label carried along when present.
  Volume volume;
  PreprocessRecord record;
};

// (i) trilinear resample to 1 mm, (ii) crop to the head bounding box,
// (iii) trilinear resize to target_dims, (iv) min-max normalization.
// Labels follow the same geometry, thresholded at 0.5.
Preprocessed preprocess(const Volume& v, const Dims& target_dims, const PreprocessOptions& options = {});

// Inverse geometry of preprocess() for a map on the target grid; zero outside
// the cropped region. Returns a volume with the original dims and spacing.
Volume invert_to_original(std::span<const float> map, const PreprocessRecord& record);

}  // namespace attnseg
