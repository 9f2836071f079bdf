#include "instances.h"

#include <algorithm>

namespace attnseg::testing {

std::int64_t at(std::int64_t z, std::int64_t y, std::int64_t x, const Dims& d) { return (z * d[1] + y) * d[2] + x; }

void fill_box(std::vector<std::uint8_t>& m, Dims lo, Dims hi, const Dims& d) {
  for (auto z = lo[0]; z < hi[0]; ++z)
    for (auto y = lo[1]; y < hi[1]; ++y)
      for (auto x = lo[2]; x < hi[2]; ++x) m[static_cast<std::size_t>(at(z, y, x, d))] = 1;
}

std::vector<std::uint8_t> random_mask(Rng& rng, double density) {
  std::vector<std::uint8_t> m(4096, 0);
  const int boxes = static_cast<int>(uniform_index(rng, 4));
  for (int b = 0; b < boxes; ++b) {
    Dims lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<std::int64_t>(uniform_index(rng, 14));
      hi[a] = std::min<std::int64_t>(16, lo[a] + 1 + static_cast<std::int64_t>(uniform_index(rng, 5)));
    }
    fill_box(m, lo, hi);
  }
  for (auto& v : m) {
    if (uniform01(rng) < density) v = 1;
  }
  return m;
}

std::vector<float> random_prob(Rng& rng, const std::vector<std::uint8_t>& gt) {
  std::vector<float> p(gt.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double base = gt[i] ? uniform(rng, 0.2, 1.0) : uniform(rng, 0.0, 0.6);
    p[i] = static_cast<float>(uniform01(rng) < 0.03 ? uniform01(rng) : base * base);
  }
  return p;
}

}  // namespace attnseg::testing
