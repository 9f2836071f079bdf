#pragma once

#include <array>

#include "attnseg/random.h"
#include "attnseg/volume.h"

namespace attnseg {

struct AugmentRanges {
  double probability = 0.5;
  double max_rotation_deg = 20.0;
  // Fraction of the axis length.
  double max_translation = 0.1;
  double min_zoom = 0.8;
  double max_zoom = 1.2;
};

// All transforms act in the axial (y, x) plane; z is never touched.
struct AugmentParams {
  bool flip_horizontal = false;  // x axis
  bool flip_vertical = false;    // y axis
  double rotate_deg = 0.0;
  std::array<double, 2> translate{0.0, 0.0};  // voxels along (y, x)
  double zoom = 1.0;

  bool is_identity() const {
    return !flip_horizontal && !flip_vertical && rotate_deg == 0.0 && translate[0] == 0.0 &&
           translate[1] == 0.0 && zoom == 1.0;
  }
};

// Each transform is enabled independently with ranges.probability.
AugmentParams draw_augment(Rng& rng, const Dims& dims, const AugmentRanges& ranges = {});

// Flips are exact index permutations; the affine part (rotation, zoom,
// translation about the in-plane centre) samples the image bilinearly with
// zero fill and the annotation by nearest neighbour.
Volume apply_augment(const Volume& v, const AugmentParams& params);

Volume augment(const Volume& v, Rng& rng, const AugmentRanges& ranges = {});

}  // namespace attnseg
