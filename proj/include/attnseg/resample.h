#pragma once

#include <span>
#include <vector>

#include "attnseg/volume.h"

namespace attnseg {

// Trilinear interpolation at fractional voxel coordinates (z, y, x).
// Outside [0, n-1] on any axis the result is `fill`.
float sample_trilinear(std::span<const float> data, const Dims& dims, double z, double y, double x,
                       float fill = 0.0f);
// Coordinates clamped to the grid instead.
float sample_trilinear_clamped(std::span<const float> data, const Dims& dims, double z, double y,
                               double x);

// Align-corners resize: output voxel j on an axis samples input position
// j * (n_in - 1) / (n_out - 1) (position 0 when n_out == 1).
std::vector<float> resize_trilinear(std::span<const float> data, const Dims& from, const Dims& to);

// Output dims for resampling an axis of n voxels at spacing s to 1 mm:
// floor((n - 1) * s) + 1.
Dims isotropic_dims(const Dims& dims, const std::array<double, 3>& spacing_xyz);

// Samples the grid at physical positions j mm (voxel j / s) on every axis.
std::vector<float> resample_isotropic(std::span<const float> data, const Dims& dims,
                                      const std::array<double, 3>& spacing_xyz);

}  // namespace attnseg
