#include "attnseg/phantom.h"

#include <cmath>
#include <numeric>

#include "attnseg/error.h"
#include "attnseg/random.h"

namespace attnseg {

namespace {

struct Ellipsoid {
  std::array<double, 3> centre;  // (x, y, z) mm
  std::array<double, 3> axes;    // (x, y, z) mm
};

template <typename F>
void for_each_voxel(const PhantomSpec& s, F&& f) {
  const Dims& d = s.dims;
  for (std::int64_t z = 0, i = 0; z < d[0]; ++z)
    for (std::int64_t y = 0; y < d[1]; ++y)
      for (std::int64_t x = 0; x < d[2]; ++x, ++i)
        f(i, std::array<double, 3>{x * s.spacing[0], y * s.spacing[1], z * s.spacing[2]});
}

bool inside(const Ellipsoid& e, const std::array<double, 3>& p, double scale = 1.0) {
  double r = 0;
  for (int a = 0; a < 3; ++a) {
    const double q = (p[a] - e.centre[a]) / (e.axes[a] * scale);
    r += q * q;
  }
  return r <= 1.0;
}

std::int64_t voxel_count(const PhantomSpec& s, const Ellipsoid& e) {
  // Only the bounding box of the ellipsoid can contribute.
  std::int64_t lo[3], hi[3];
  const std::int64_t n[3] = {s.dims[2], s.dims[1], s.dims[0]};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((e.centre[a] - e.axes[a]) / s.spacing[a])));
    hi[a] = std::min<std::int64_t>(n[a] - 1, static_cast<std::int64_t>(std::ceil((e.centre[a] + e.axes[a]) / s.spacing[a])));
  }
  std::int64_t count = 0;
  for (std::int64_t z = lo[2]; z <= hi[2]; ++z)
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
      for (std::int64_t x = lo[0]; x <= hi[0]; ++x)
        count += inside(e, {x * s.spacing[0], y * s.spacing[1], z * s.spacing[2]});
  return count;
}

// Scales the axes so the voxelized volume is as close as possible to target.
double fit_scale(const PhantomSpec& s, Ellipsoid e, double target_voxels) {
  double lo = 0.0, hi = 0.0;
  const double nominal = std::cbrt(target_voxels * s.spacing[0] * s.spacing[1] * s.spacing[2] * 3.0 /
                                   (4.0 * M_PI * e.axes[0] * e.axes[1] * e.axes[2]));
  hi = nominal * 2.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    Ellipsoid t = e;
    for (auto& a : t.axes) a *= mid;
    if (static_cast<double>(voxel_count(s, t)) < target_voxels) lo = mid;
    else hi = mid;
  }
  // Pick whichever bracket end voxelizes closer.
  Ellipsoid a = e, b = e;
  for (auto& x : a.axes) x *= lo;
  for (auto& x : b.axes) x *= hi;
  const double ea = std::abs(voxel_count(s, a) - target_voxels), eb = std::abs(voxel_count(s, b) - target_voxels);
  return ea < eb ? lo : hi;
}

double distance_to_segment(const std::array<double, 3>& p, const std::array<double, 3>& a,
                           const std::array<double, 3>& b) {
  std::array<double, 3> ab{}, ap{};
  double len2 = 0, dot = 0;
  for (int i = 0; i < 3; ++i) {
    ab[i] = b[i] - a[i];
    ap[i] = p[i] - a[i];
    len2 += ab[i] * ab[i];
    dot += ab[i] * ap[i];
  }
  const double t = len2 > 0 ? std::clamp(dot / len2, 0.0, 1.0) : 0.0;
  double d2 = 0;
  for (int i = 0; i < 3; ++i) {
    const double q = ap[i] - t * ab[i];
    d2 += q * q;
  }
  return std::sqrt(d2);
}

}  // namespace

Volume generate_phantom(const PhantomSpec& s) {
  for (auto n : s.dims) {
    if (n < 2) throw InputError("phantom: dims must be >= 2");
  }
  for (double v : s.tumor_volumes_ml) {
    if (!(v > 0)) throw InputError("phantom: tumour volumes must be positive");
  }
  Rng rng(mix_seed(s.seed, fnv1a("phantom")));
  Volume v;
  v.id = s.id;
  v.dims = s.dims;
  v.spacing = s.spacing;
  v.data.assign(static_cast<std::size_t>(v.voxels()), 0.0f);
  v.label.assign(v.data.size(), 0);

  const std::array<double, 3> fov{(s.dims[2] - 1) * s.spacing[0], (s.dims[1] - 1) * s.spacing[1],
                                  (s.dims[0] - 1) * s.spacing[2]};
  Ellipsoid head{};
  for (int a = 0; a < 3; ++a) {
    head.axes[a] = s.head_semi_axes[a] * uniform(rng, 0.92, 1.0);
    head.centre[a] = fov[a] / 2 + uniform(rng, -1.5, 1.5);
    if (head.centre[a] - head.axes[a] < 0 || head.centre[a] + head.axes[a] > fov[a]) {
      throw InputError("phantom: head ellipsoid does not fit the field of view");
    }
  }
  for_each_voxel(s, [&](std::int64_t i, const auto& p) {
    if (inside(head, p)) v.data[static_cast<std::size_t>(i)] = static_cast<float>(s.head_intensity);
  });

  for (int k = 0; k < s.vessel_count; ++k) {
    std::array<double, 3> a{}, b{};
    for (int i = 0; i < 3; ++i) {
      a[i] = head.centre[i] + uniform(rng, -0.7, 0.7) * head.axes[i];
      b[i] = head.centre[i] + uniform(rng, -0.7, 0.7) * head.axes[i];
    }
    for_each_voxel(s, [&](std::int64_t i, const auto& p) {
      if (distance_to_segment(p, a, b) <= s.vessel_radius_mm) {
        v.data[static_cast<std::size_t>(i)] = static_cast<float>(s.vessel_intensity);
      }
    });
  }

  std::vector<Ellipsoid> placed;
  const double voxel_ml = v.voxel_ml();
  for (double ml : s.tumor_volumes_ml) {
    const double target = ml / voxel_ml;
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      Ellipsoid e{};
      for (int a = 0; a < 3; ++a) e.axes[a] = uniform(rng, 1 - s.tumor_elongation, 1 + s.tumor_elongation);
      const std::array<double, 3> offset{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
      e.centre = head.centre;
      const double k = fit_scale(s, e, target);
      for (auto& x : e.axes) x *= k;
      // Keep the tumour inside 85 % of the head.
      for (int a = 0; a < 3; ++a) {
        const double room = 0.85 * head.axes[a] - e.axes[a];
        if (room <= 0) break;
        e.centre[a] = head.centre[a] + offset[a] * room;
      }
      bool fits = true;
      for (int a = 0; a < 3; ++a) fits &= 0.85 * head.axes[a] - e.axes[a] > 0;
      for (const auto& o : placed) {
        double d2 = 0, r = 0;
        for (int a = 0; a < 3; ++a) {
          d2 += (e.centre[a] - o.centre[a]) * (e.centre[a] - o.centre[a]);
          r = std::max(r, e.axes[a] + o.axes[a]);
        }
        fits &= std::sqrt(d2) > r + 3.0;
      }
      if (!fits) continue;
      const double count = static_cast<double>(voxel_count(s, e));
      if (std::abs(count - target) > 0.05 * target) continue;
      placed.push_back(e);
      ok = true;
    }
    if (!ok) {
      throw InputError("phantom '" + s.id + "': cannot place a " + std::to_string(ml) + " ml tumour");
    }
  }
  for_each_voxel(s, [&](std::int64_t i, const auto& p) {
    for (const auto& e : placed) {
      if (inside(e, p)) {
        v.data[static_cast<std::size_t>(i)] = static_cast<float>(s.tumor_intensity);
        v.label[static_cast<std::size_t>(i)] = 1;
      }
    }
  });

  Rng noise(mix_seed(s.seed, fnv1a("noise")));
  for (auto& x : v.data) x += static_cast<float>(s.noise_sigma * standard_normal(noise));
  return v;
}

std::vector<PhantomSpec> cohort_specs(const CohortSpec& c) {
  if (c.count < 0) throw InputError("cohort: count must be >= 0");
  if (!(c.min_volume_ml > 0) || !(c.max_volume_ml >= c.min_volume_ml)) {
    throw InputError("cohort: need 0 < min_volume_ml <= max_volume_ml");
  }
  Rng rng(mix_seed(c.seed, fnv1a("cohort")));
  std::vector<int> stratum(static_cast<std::size_t>(c.count));
  std::iota(stratum.begin(), stratum.end(), 0);
  for (std::size_t i = stratum.size(); i > 1; --i) std::swap(stratum[i - 1], stratum[uniform_index(rng, i)]);
  const double llo = std::log(c.min_volume_ml), lhi = std::log(c.max_volume_ml);
  std::vector<PhantomSpec> out;
  for (int i = 0; i < c.count; ++i) {
    PhantomSpec s = c.base;
    char id[16];
    std::snprintf(id, sizeof id, "P%03d", i);
    s.id = id;
    s.seed = mix_seed(c.seed, static_cast<std::uint64_t>(i) + 1);
    // Central half of each stratum so voxelization error cannot cross strata.
    const double u = (stratum[static_cast<std::size_t>(i)] + uniform(rng, 0.25, 0.75)) / c.count;
    s.tumor_volumes_ml = {std::exp(llo + u * (lhi - llo))};
    out.push_back(s);
  }
  return out;
}

}  // namespace attnseg
