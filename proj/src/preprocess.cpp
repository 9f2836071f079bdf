#include "attnseg/preprocess.h"

#include <algorithm>

#include "attnseg/components.h"
#include "attnseg/error.h"
#include "attnseg/resample.h"

namespace attnseg {

namespace {

std::vector<float> as_float(const std::vector<std::uint8_t>& l) { return {l.begin(), l.end()}; }

std::vector<std::uint8_t> binarize(const std::vector<float>& v) {
  std::vector<std::uint8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] >= 0.5f;
  return out;
}

template <typename V>
std::vector<V> crop(const std::vector<V>& src, const Dims& d, const Dims& origin, const Dims& size) {
  std::vector<V> out(static_cast<std::size_t>(dims_voxels(size)));
  std::size_t k = 0;
  for (std::int64_t z = 0; z < size[0]; ++z)
    for (std::int64_t y = 0; y < size[1]; ++y)
      for (std::int64_t x = 0; x < size[2]; ++x)
        out[k++] = src[static_cast<std::size_t>(((z + origin[0]) * d[1] + y + origin[1]) * d[2] + x + origin[2])];
  return out;
}

}  // namespace

Preprocessed preprocess(const Volume& v, const Dims& target, const PreprocessOptions& opt) {
  validate(v);
  for (auto n : target) {
    if (n < 1) throw InputError("preprocess: target dims must be positive");
  }
  const auto [lo_it, hi_it] = std::minmax_element(v.data.begin(), v.data.end());
  if (!(*hi_it > *lo_it)) throw InputError("preprocess: volume '" + v.id + "' is constant; cannot normalize");

  Preprocessed out;
  PreprocessRecord& r = out.record;
  r.original_dims = v.dims;
  r.original_spacing = v.spacing;
  r.target_dims = target;

  // (i)
  r.resampled_dims = isotropic_dims(v.dims, v.spacing);
  const std::vector<float> iso = resample_isotropic(v.data, v.dims, v.spacing);
  std::vector<float> iso_label;
  if (v.has_label()) iso_label = resample_isotropic(as_float(v.label), v.dims, v.spacing);

  // (ii)
  const float peak = *std::max_element(iso.begin(), iso.end());
  std::vector<std::uint8_t> head(iso.size());
  for (std::size_t i = 0; i < iso.size(); ++i) head[i] = peak > 0 && iso[i] > opt.head_threshold * peak;
  const std::vector<std::uint8_t> largest = largest_component(connected_components(head, r.resampled_dims));
  Dims lo{r.resampled_dims}, hi{-1, -1, -1};
  const Dims& rd = r.resampled_dims;
  for (std::int64_t z = 0, i = 0; z < rd[0]; ++z)
    for (std::int64_t y = 0; y < rd[1]; ++y)
      for (std::int64_t x = 0; x < rd[2]; ++x, ++i) {
        if (!largest[static_cast<std::size_t>(i)]) continue;
        const std::int64_t p[3] = {z, y, x};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
  if (hi[0] < 0) throw InputError("preprocess: volume '" + v.id + "' has an empty head mask; cannot clip");
  for (int a = 0; a < 3; ++a) {
    r.crop_origin[a] = std::max<std::int64_t>(lo[a] - opt.margin, 0);
    r.crop_dims[a] = std::min(hi[a] + opt.margin, rd[a] - 1) - r.crop_origin[a] + 1;
  }
  const std::vector<float> cropped = crop(iso, rd, r.crop_origin, r.crop_dims);

  // (iii)
  std::vector<float> resized = resize_trilinear(cropped, r.crop_dims, target);

  // (iv)
  const auto [mn, mx] = std::minmax_element(resized.begin(), resized.end());
  r.intensity_min = *mn;
  r.intensity_max = *mx;
  if (!(r.intensity_max > r.intensity_min)) {
    throw InputError("preprocess: volume '" + v.id + "' is constant after clipping; cannot normalize");
  }
  const float range = r.intensity_max - r.intensity_min;
  for (auto& x : resized) x = (x - r.intensity_min) / range;

  Volume& o = out.volume;
  o.id = v.id;
  o.dims = target;
  for (int a = 0; a < 3; ++a) {
    const double extent = double(r.crop_dims[a] - 1);
    o.spacing[static_cast<std::size_t>(2 - a)] = target[a] > 1 ? extent / double(target[a] - 1) : 1.0;
    if (!(o.spacing[static_cast<std::size_t>(2 - a)] > 0)) o.spacing[static_cast<std::size_t>(2 - a)] = 1.0;
  }
  o.data = std::move(resized);
  if (v.has_label()) {
    o.label = binarize(resize_trilinear(crop(iso_label, rd, r.crop_origin, r.crop_dims), r.crop_dims, target));
  }
  return out;
}

Volume invert_to_original(std::span<const float> map, const PreprocessRecord& r) {
  if (static_cast<std::int64_t>(map.size()) != dims_voxels(r.target_dims)) {
    throw InputError("invert_to_original: map has " + std::to_string(map.size()) + " voxels, record expects " +
                     dims_to_string(r.target_dims));
  }
  const std::vector<float> crop_map = resize_trilinear(map, r.target_dims, r.crop_dims);
  std::vector<float> iso(static_cast<std::size_t>(dims_voxels(r.resampled_dims)), 0.0f);
  const Dims& rd = r.resampled_dims;
  for (std::int64_t z = 0, k = 0; z < r.crop_dims[0]; ++z)
    for (std::int64_t y = 0; y < r.crop_dims[1]; ++y)
      for (std::int64_t x = 0; x < r.crop_dims[2]; ++x, ++k)
        iso[static_cast<std::size_t>(((z + r.crop_origin[0]) * rd[1] + y + r.crop_origin[1]) * rd[2] + x +
                                     r.crop_origin[2])] = crop_map[static_cast<std::size_t>(k)];

  Volume out;
  out.dims = r.original_dims;
  out.spacing = r.original_spacing;
  out.data.resize(static_cast<std::size_t>(dims_voxels(out.dims)));
  const auto& s = r.original_spacing;
  const Dims& od = r.original_dims;
  if (rd == od && s == std::array<double, 3>{1.0, 1.0, 1.0}) {
    out.data = std::move(iso);
    return out;
  }
  std::size_t k = 0;
  for (std::int64_t z = 0; z < od[0]; ++z)
    for (std::int64_t y = 0; y < od[1]; ++y)
      for (std::int64_t x = 0; x < od[2]; ++x)
        out.data[k++] = sample_trilinear_clamped(iso, rd, z * s[2], y * s[1], x * s[0]);
  return out;
}

}  // namespace attnseg
