#include "attnseg/augment.h"

#include <cmath>

#include "attnseg/resample.h"

namespace attnseg {

AugmentParams draw_augment(Rng& rng, const Dims& dims, const AugmentRanges& r) {
  AugmentParams p;
  // Fixed draw order keeps streams comparable when a transform is skipped.
  const bool on[5] = {uniform01(rng) < r.probability, uniform01(rng) < r.probability,
                      uniform01(rng) < r.probability, uniform01(rng) < r.probability,
                      uniform01(rng) < r.probability};
  const double angle = uniform(rng, -r.max_rotation_deg, r.max_rotation_deg);
  const double ty = uniform(rng, -r.max_translation, r.max_translation) * double(dims[1]);
  const double tx = uniform(rng, -r.max_translation, r.max_translation) * double(dims[2]);
  const double zoom = uniform(rng, r.min_zoom, r.max_zoom);
  p.flip_horizontal = on[0];
  p.flip_vertical = on[1];
  if (on[2]) p.rotate_deg = angle;
  if (on[3]) p.translate = {ty, tx};
  if (on[4]) p.zoom = zoom;
  return p;
}

namespace {

template <typename V>
void flip_axis(std::vector<V>& data, const Dims& d, int axis) {
  if (data.empty()) return;
  std::vector<V> out(data.size());
  for (std::int64_t z = 0; z < d[0]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[2]; ++x) {
        const std::int64_t sy = axis == 1 ? d[1] - 1 - y : y;
        const std::int64_t sx = axis == 2 ? d[2] - 1 - x : x;
        out[static_cast<std::size_t>((z * d[1] + y) * d[2] + x)] =
            data[static_cast<std::size_t>((z * d[1] + sy) * d[2] + sx)];
      }
  data.swap(out);
}

}  // namespace

Volume apply_augment(const Volume& v, const AugmentParams& p) {
  Volume out = v;
  if (p.is_identity()) return out;
  if (p.flip_horizontal) {
    flip_axis(out.data, v.dims, 2);
    flip_axis(out.label, v.dims, 2);
  }
  if (p.flip_vertical) {
    flip_axis(out.data, v.dims, 1);
    flip_axis(out.label, v.dims, 1);
  }
  if (p.rotate_deg == 0.0 && p.zoom == 1.0 && p.translate[0] == 0.0 && p.translate[1] == 0.0) return out;

  // Output position q = Z R (s - c) + c + t, so s = R^-1 (q - c - t) / zoom + c.
  const Dims& d = v.dims;
  const double cy = (d[1] - 1) / 2.0, cx = (d[2] - 1) / 2.0;
  const double th = p.rotate_deg * M_PI / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const Volume src = out;
  const std::int64_t plane = d[1] * d[2];
  for (std::int64_t y = 0; y < d[1]; ++y) {
    for (std::int64_t x = 0; x < d[2]; ++x) {
      const double qy = y - cy - p.translate[0], qx = x - cx - p.translate[1];
      const double sy = (cs * qy + sn * qx) / p.zoom + cy;
      const double sx = (-sn * qy + cs * qx) / p.zoom + cx;
      const auto ny = static_cast<std::int64_t>(std::lround(sy));
      const auto nx = static_cast<std::int64_t>(std::lround(sx));
      const bool inside = ny >= 0 && ny < d[1] && nx >= 0 && nx < d[2];
      for (std::int64_t z = 0; z < d[0]; ++z) {
        const auto k = static_cast<std::size_t>(z * plane + y * d[2] + x);
        out.data[k] = sample_trilinear(src.data, d, double(z), sy, sx, 0.0f);
        if (src.has_label()) {
          out.label[k] = inside ? src.label[static_cast<std::size_t>(z * plane + ny * d[2] + nx)] : 0;
        }
      }
    }
  }
  return out;
}

Volume augment(const Volume& v, Rng& rng, const AugmentRanges& ranges) {
  return apply_augment(v, draw_augment(rng, v.dims, ranges));
}

}  // namespace attnseg
