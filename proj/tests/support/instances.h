#pragma once

#include <cstdint>
#include <vector>

#include "attnseg/random.h"
#include "attnseg/volume.h"

namespace attnseg::testing {

inline constexpr Dims k16{16, 16, 16};

// Flat index into a 16^3 (or `d`) grid.
std::int64_t at(std::int64_t z, std::int64_t y, std::int64_t x, const Dims& d = k16);
void fill_box(std::vector<std::uint8_t>& m, Dims lo, Dims hi, const Dims& d = k16);

// Up to 3 random boxes plus scattered voxels on a 16^3 grid.
std::vector<std::uint8_t> random_mask(Rng& rng, double density);
// Probabilities biased high on gt voxels, with a few uniform outliers.
std::vector<float> random_prob(Rng& rng, const std::vector<std::uint8_t>& gt);

}  // namespace attnseg::testing
