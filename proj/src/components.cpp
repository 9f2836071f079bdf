#include "attnseg/components.h"

#include <numeric>

#include "attnseg/error.h"

namespace attnseg {

namespace {

struct DisjointSet {
  std::vector<std::int32_t> parent;
  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

ComponentLabeling connected_components(std::span<const std::uint8_t> mask, const Dims& d, int connectivity) {
  if (static_cast<std::int64_t>(mask.size()) != dims_voxels(d)) {
    throw InputError("connected_components: mask size does not match dims");
  }
  if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
    throw InputError("connected_components: connectivity must be 6, 18 or 26");
  }
  // Already-visited neighbours in raster order.
  std::vector<std::array<int, 3>> back;
  for (int dz = -1; dz <= 0; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int order = std::abs(dz) + std::abs(dy) + std::abs(dx);
        if (connectivity == 6 && order > 1) continue;
        if (connectivity == 18 && order > 2) continue;
        back.push_back({dz, dy, dx});
      }

  ComponentLabeling out;
  out.dims = d;
  out.labels.assign(mask.size(), 0);
  DisjointSet sets;
  sets.make();  // slot 0 = background
  for (std::int64_t z = 0; z < d[0]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[2]; ++x) {
        const std::int64_t i = (z * d[1] + y) * d[2] + x;
        if (!mask[static_cast<std::size_t>(i)]) continue;
        std::int32_t label = 0;
        for (const auto& o : back) {
          const std::int64_t nz = z + o[0], ny = y + o[1], nx = x + o[2];
          if (nz < 0 || ny < 0 || ny >= d[1] || nx < 0 || nx >= d[2]) continue;
          const std::int32_t n = out.labels[static_cast<std::size_t>((nz * d[1] + ny) * d[2] + nx)];
          if (n == 0) continue;
          if (label == 0) label = n;
          else sets.unite(label, n);
        }
        out.labels[static_cast<std::size_t>(i)] = label == 0 ? sets.make() : label;
      }

  // Final labels in order of each component's first voxel.
  std::vector<std::int32_t> final_label(sets.parent.size(), 0);
  for (auto& l : out.labels) {
    if (l == 0) continue;
    const std::int32_t root = sets.find(l);
    if (final_label[static_cast<std::size_t>(root)] == 0) {
      final_label[static_cast<std::size_t>(root)] = ++out.count;
      out.sizes.push_back(0);
    }
    l = final_label[static_cast<std::size_t>(root)];
    ++out.sizes[static_cast<std::size_t>(l - 1)];
  }
  return out;
}

double component_volume_ml(const ComponentLabeling& c, int label, double voxel_ml) {
  if (label < 1 || label > c.count) throw InputError("component_volume_ml: label out of range");
  return static_cast<double>(c.sizes[static_cast<std::size_t>(label - 1)]) * voxel_ml;
}

std::vector<std::uint8_t> largest_component(const ComponentLabeling& c) {
  std::vector<std::uint8_t> mask(c.labels.size(), 0);
  if (c.count == 0) return mask;
  int best = 1;
  for (int k = 2; k <= c.count; ++k) {
    if (c.sizes[static_cast<std::size_t>(k - 1)] > c.sizes[static_cast<std::size_t>(best - 1)]) best = k;
  }
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = c.labels[i] == best;
  return mask;
}

}  // namespace attnseg
