#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attnseg/volume.h"

namespace attnseg {

struct PhantomSpec {
  std::string id = "phantom";
  Dims dims{40, 64, 64};
  std::array<double, 3> spacing{1.0, 1.0, 1.6};  // (sx, sy, sz) mm
  std::array<double, 3> head_semi_axes{28.0, 30.0, 27.0};  // (x, y, z) mm
  double head_intensity = 0.4;
  std::vector<double> tumor_volumes_ml;
  double tumor_intensity = 0.85;
  // Per-axis semi-axis ratios are drawn from [1 - e, 1 + e].
  double tumor_elongation = 0.2;
  int vessel_count = 3;
  double vessel_radius_mm = 1.5;
  double vessel_intensity = 0.8;
  double noise_sigma = 0.04;
  std::uint64_t seed = 0;
};

// Head ellipsoid, bright tumour ellipsoids whose voxel volume matches the
// request within 5 %, tubular bright vessels, additive Gaussian noise. The
// annotation marks tumour voxels only. Throws InputError when a tumour
// cannot be placed.
Volume generate_phantom(const PhantomSpec& spec);

struct CohortSpec {
  int count = 50;
  double min_volume_ml = 0.1;
  double max_volume_ml = 10.0;
  std::uint64_t seed = 0;
  PhantomSpec base;
};

// One tumour per patient; log volumes are stratified over `count` equal
// strata of [log min, log max) and assigned to patients in shuffled order.
std::vector<PhantomSpec> cohort_specs(const CohortSpec& cohort);

}  // namespace attnseg
