#include "attnseg/resample.h"

#include <algorithm>
#include <cmath>

#include "attnseg/error.h"

namespace attnseg {

namespace {

struct Tap {
  std::int64_t i0, i1;
  double w1;
};

// Assumes 0 <= p <= n - 1.
Tap tap(double p, std::int64_t n) {
  auto i0 = static_cast<std::int64_t>(std::floor(p));
  i0 = std::clamp<std::int64_t>(i0, 0, n - 1);
  const std::int64_t i1 = std::min(i0 + 1, n - 1);
  return {i0, i1, p - static_cast<double>(i0)};
}

float interpolate(std::span<const float> v, const Dims& d, double z, double y, double x) {
  const Tap tz = tap(z, d[0]), ty = tap(y, d[1]), tx = tap(x, d[2]);
  auto at = [&](std::int64_t a, std::int64_t b, std::int64_t c) {
    return static_cast<double>(v[static_cast<std::size_t>((a * d[1] + b) * d[2] + c)]);
  };
  auto lerp = [](double a, double b, double w) { return w == 0.0 ? a : a + (b - a) * w; };
  const double c00 = lerp(at(tz.i0, ty.i0, tx.i0), at(tz.i0, ty.i0, tx.i1), tx.w1);
  const double c01 = lerp(at(tz.i0, ty.i1, tx.i0), at(tz.i0, ty.i1, tx.i1), tx.w1);
  const double c10 = lerp(at(tz.i1, ty.i0, tx.i0), at(tz.i1, ty.i0, tx.i1), tx.w1);
  const double c11 = lerp(at(tz.i1, ty.i1, tx.i0), at(tz.i1, ty.i1, tx.i1), tx.w1);
  return static_cast<float>(lerp(lerp(c00, c01, ty.w1), lerp(c10, c11, ty.w1), tz.w1));
}

void check(std::span<const float> data, const Dims& dims) {
  if (static_cast<std::int64_t>(data.size()) != dims_voxels(dims)) {
    throw InputError("resample: data size does not match dims " + dims_to_string(dims));
  }
}

}  // namespace

float sample_trilinear(std::span<const float> data, const Dims& d, double z, double y, double x,
                       float fill) {
  // Small tolerance so positions that land on the last voxel up to rounding stay inside.
  constexpr double tol = 1e-9;
  if (z < -tol || y < -tol || x < -tol || z > d[0] - 1 + tol || y > d[1] - 1 + tol ||
      x > d[2] - 1 + tol) {
    return fill;
  }
  return interpolate(data, d, std::clamp(z, 0.0, double(d[0] - 1)), std::clamp(y, 0.0, double(d[1] - 1)),
                     std::clamp(x, 0.0, double(d[2] - 1)));
}

float sample_trilinear_clamped(std::span<const float> data, const Dims& d, double z, double y, double x) {
  return interpolate(data, d, std::clamp(z, 0.0, double(d[0] - 1)), std::clamp(y, 0.0, double(d[1] - 1)),
                     std::clamp(x, 0.0, double(d[2] - 1)));
}

std::vector<float> resize_trilinear(std::span<const float> data, const Dims& from, const Dims& to) {
  check(data, from);
  for (auto n : to) {
    if (n < 1) throw InputError("resize_trilinear: target dims must be positive");
  }
  if (from == to) return {data.begin(), data.end()};
  std::array<double, 3> ratio{};
  for (int a = 0; a < 3; ++a) {
    ratio[a] = to[a] > 1 ? double(from[a] - 1) / double(to[a] - 1) : 0.0;
  }
  std::vector<float> out(static_cast<std::size_t>(dims_voxels(to)));
  std::size_t k = 0;
  for (std::int64_t z = 0; z < to[0]; ++z)
    for (std::int64_t y = 0; y < to[1]; ++y)
      for (std::int64_t x = 0; x < to[2]; ++x)
        out[k++] = sample_trilinear_clamped(data, from, z * ratio[0], y * ratio[1], x * ratio[2]);
  return out;
}

Dims isotropic_dims(const Dims& dims, const std::array<double, 3>& s) {
  Dims out{};
  for (int a = 0; a < 3; ++a) {
    const double sp = s[static_cast<std::size_t>(2 - a)];
    out[a] = static_cast<std::int64_t>(std::floor(double(dims[a] - 1) * sp + 1e-6)) + 1;
  }
  return out;
}

std::vector<float> resample_isotropic(std::span<const float> data, const Dims& dims,
                                      const std::array<double, 3>& s) {
  check(data, dims);
  const Dims to = isotropic_dims(dims, s);
  if (to == dims && s == std::array<double, 3>{1.0, 1.0, 1.0}) return {data.begin(), data.end()};
  std::vector<float> out(static_cast<std::size_t>(dims_voxels(to)));
  std::size_t k = 0;
  for (std::int64_t z = 0; z < to[0]; ++z)
    for (std::int64_t y = 0; y < to[1]; ++y)
      for (std::int64_t x = 0; x < to[2]; ++x)
        out[k++] = sample_trilinear_clamped(data, dims, z / s[2], y / s[1], x / s[0]);
  return out;
}

}  // namespace attnseg
