#include "attnseg/volume_io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "json.hpp"

#include "attnseg/error.h"

namespace attnseg {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

std::string float_bytes(const std::vector<float>& v) {
  std::string s(v.size() * 4, '\0');
  std::memcpy(s.data(), v.data(), s.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < s.size(); i += 4) std::reverse(s.begin() + i, s.begin() + i + 4);
  }
  return s;
}

json parse_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IntegrityError(path + ": " + e.what());
  }
}

}  // namespace

void write_volume(const std::string& dir, const Volume& v) {
  validate(v);
  make_dir(dir);
  json meta = {{"id", v.id},
               {"dims", v.dims},
               {"spacing", v.spacing},
               {"dtype", "float32"},
               {"byte_order", "little"},
               {"label", v.has_label() ? json("label.raw") : json(nullptr)},
               {"label_dtype", "uint8"}};
  write_text(dir + "/meta.json", meta.dump(2) + "\n");
  write_text(dir + "/image.raw", float_bytes(v.data));
  if (v.has_label()) {
    write_text(dir + "/label.raw", std::string(v.label.begin(), v.label.end()));
  } else {
    std::error_code ec;
    fs::remove(dir + "/label.raw", ec);
  }
}

Volume read_volume(const std::string& dir) {
  const json meta = parse_json(dir + "/meta.json");
  Volume v;
  try {
    v.id = meta.at("id").get<std::string>();
    v.dims = meta.at("dims").get<Dims>();
    v.spacing = meta.at("spacing").get<std::array<double, 3>>();
    if (meta.at("dtype") != "float32" || meta.at("byte_order") != "little") {
      throw IntegrityError(dir + ": only little-endian float32 volumes are supported");
    }
  } catch (const json::exception& e) {
    throw IntegrityError(dir + "/meta.json: " + e.what());
  }
  const std::string raw = read_text(dir + "/image.raw");
  const auto n = static_cast<std::size_t>(dims_voxels(v.dims));
  if (raw.size() != n * 4) throw IntegrityError(dir + "/image.raw: size does not match dims");
  v.data.resize(n);
  std::string bytes = raw;
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += 4) std::reverse(bytes.begin() + i, bytes.begin() + i + 4);
  }
  std::memcpy(v.data.data(), bytes.data(), bytes.size());
  if (meta.contains("label") && meta.at("label").is_string()) {
    const std::string lab = read_text(dir + "/" + meta.at("label").get<std::string>());
    if (lab.size() != n) throw IntegrityError(dir + ": label size does not match dims");
    v.label.assign(lab.begin(), lab.end());
  }
  validate(v);
  return v;
}

void write_manifest(const std::string& dir, const std::vector<ManifestEntry>& entries) {
  make_dir(dir);
  json list = json::array();
  for (const auto& e : entries) {
    list.push_back({{"id", e.id}, {"path", e.path}, {"tumor_volume_ml", e.tumor_volume_ml}});
  }
  write_text(dir + "/manifest.json", json{{"patients", list}}.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const std::string& dir) {
  const json j = parse_json(dir + "/manifest.json");
  std::vector<ManifestEntry> out;
  try {
    for (const auto& e : j.at("patients")) {
      out.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>(),
                     e.at("tumor_volume_ml").get<double>()});
    }
  } catch (const json::exception& e) {
    throw IntegrityError(dir + "/manifest.json: " + e.what());
  }
  return out;
}

}  // namespace attnseg
