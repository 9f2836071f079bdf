#pragma once

#include <string>
#include <vector>

#include "attnseg/volume.h"

namespace attnseg {

// A volume directory holds meta.json (id, dims, spacing, dtype, byte order),
// image.raw (float32 little-endian) and, when annotated, label.raw (uint8).
void write_volume(const std::string& dir, const Volume& v);
Volume read_volume(const std::string& dir);

struct ManifestEntry {
  std::string id;
  // Relative to the manifest's directory.
  std::string path;
  double tumor_volume_ml = 0;
};

// <dir>/manifest.json
void write_manifest(const std::string& dir, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& dir);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace attnseg
