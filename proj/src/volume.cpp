#include "attnseg/volume.h"

#include <algorithm>

#include "attnseg/error.h"

namespace attnseg {

std::int64_t dims_voxels(const Dims& d) { return d[0] * d[1] * d[2]; }

std::string dims_to_string(const Dims& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

void validate(const Volume& v) {
  for (auto n : v.dims) {
    if (n < 1) throw InputError("volume '" + v.id + "': dims must be positive");
  }
  for (double s : v.spacing) {
    if (!(s > 0)) throw InputError("volume '" + v.id + "': spacing must be positive");
  }
  if (static_cast<std::int64_t>(v.data.size()) != v.voxels()) {
    throw InputError("volume '" + v.id + "': data size does not match dims " + dims_to_string(v.dims));
  }
  if (v.has_label() && static_cast<std::int64_t>(v.label.size()) != v.voxels()) {
    throw InputError("volume '" + v.id + "': annotation dims differ from data dims");
  }
}

std::int64_t label_count(const Volume& v) {
  return std::count_if(v.label.begin(), v.label.end(), [](std::uint8_t l) { return l != 0; });
}

double label_volume_ml(const Volume& v) { return static_cast<double>(label_count(v)) * v.voxel_ml(); }

}  // namespace attnseg
