#include "attnseg/checkpoint.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "attnseg/config.h"
#include "attnseg/error.h"

namespace attnseg {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'S', 'G', 'C', 'K', 'P', 'T'};

template <typename V>
void put(std::string& buf, V value) {
  char bytes[sizeof(V)];
  std::memcpy(bytes, &value, sizeof(V));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(V));
  buf.append(bytes, sizeof(V));
}

class Cursor {
 public:
  Cursor(const std::string& buf, std::size_t end, std::string path) : buf_(buf), end_(end), path_(std::move(path)) {}

  template <typename V>
  V get() {
    need(sizeof(V));
    char bytes[sizeof(V)];
    std::memcpy(bytes, buf_.data() + pos_, sizeof(V));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(V));
    pos_ += sizeof(V);
    V v;
    std::memcpy(&v, bytes, sizeof(V));
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw IntegrityError(path_ + ": truncated checkpoint");
  }
  const std::string& buf_;
  std::size_t pos_ = 0, end_;
  std::string path_;
};

std::uint32_t crc(const char* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

struct Parsed {
  ModelConfig config;
  nlohmann::json config_json;
  std::uint32_t scalar_bytes = 0;
  struct Param {
    std::string name;
    Shape shape;
    std::string raw;
  };
  std::vector<Param> params;
};

Parsed parse(const std::string& path, bool with_params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError(path + ": not a checkpoint file");
  }
  const std::size_t body = buf.size() - 4;
  Cursor tail(buf.substr(body), 4, path);
  if (tail.get<std::uint32_t>() != crc(buf.data(), body)) {
    throw IntegrityError(path + ": checksum mismatch");
  }
  Cursor c(buf, body, path);
  c.bytes(sizeof(kMagic));
  const auto version = c.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IntegrityError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Parsed p;
  p.scalar_bytes = c.get<std::uint32_t>();
  const auto json_len = c.get<std::uint64_t>();
  try {
    p.config_json = nlohmann::json::parse(c.bytes(json_len));
    p.config = model_config_from_json(p.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path + ": malformed embedded configuration: " + e.what());
  }
  if (!with_params) return p;
  const auto count = c.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    Parsed::Param param;
    param.name = c.bytes(c.get<std::uint32_t>());
    const auto ndim = c.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < ndim; ++d) param.shape.push_back(c.get<std::int64_t>());
    param.raw = c.bytes(static_cast<std::size_t>(shape_numel(param.shape)) * p.scalar_bytes);
    p.params.push_back(std::move(param));
  }
  if (!c.at_end()) throw IntegrityError(path + ": trailing bytes after parameters");
  return p;
}

template <typename T>
void copy_into(Model<T>& model, const Parsed& p, const std::string& path) {
  if (p.scalar_bytes != sizeof(T)) {
    throw ConfigError(path + ": checkpoint stores " + std::to_string(p.scalar_bytes * 8) +
                      "-bit values, model uses " + std::to_string(sizeof(T) * 8) + "-bit");
  }
  const auto& entries = model.parameters().entries();
  if (entries.size() != p.params.size()) throw IntegrityError(path + ": parameter count mismatch");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& src = p.params[k];
    Tensor<T> dst = entries[k].value;
    if (src.name != entries[k].name || src.shape != dst.shape()) {
      throw IntegrityError(path + ": parameter " + std::to_string(k) + " is " + src.name +
                           shape_to_string(src.shape) + ", expected " + entries[k].name +
                           shape_to_string(dst.shape()));
    }
    Cursor c(src.raw, src.raw.size(), path);
    for (auto& v : dst.data()) v = c.get<T>();
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  std::string buf(kMagic, sizeof(kMagic));
  put<std::uint32_t>(buf, kCheckpointVersion);
  put<std::uint32_t>(buf, sizeof(T));
  const std::string cfg = to_json(model.config()).dump();
  put<std::uint64_t>(buf, cfg.size());
  buf += cfg;
  const auto& entries = model.parameters().entries();
  put<std::uint64_t>(buf, entries.size());
  for (const auto& e : entries) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.name.size()));
    buf += e.name;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.value.ndim()));
    for (auto d : e.value.shape()) put<std::int64_t>(buf, d);
    for (T v : e.value.data()) put<T>(buf, v);
  }
  put<std::uint32_t>(buf, crc(buf.data(), buf.size()));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing checkpoint " + path);
}

ModelConfig read_checkpoint_config(const std::string& path) { return parse(path, false).config; }

template <typename T>
std::unique_ptr<Model<T>> load_checkpoint(const std::string& path) {
  const Parsed p = parse(path, true);
  auto model = std::make_unique<Model<T>>(p.config);
  copy_into(*model, p, path);
  return model;
}

template <typename T>
void load_weights(Model<T>& model, const std::string& path) {
  const Parsed p = parse(path, true);
  const auto diff = diff_fields(to_json(model.config()), p.config_json);
  if (!diff.empty()) {
    std::string msg = path + ": configuration mismatch in";
    for (const auto& f : diff) msg += " model." + f;
    throw ConfigError(msg);
  }
  copy_into(model, p, path);
}

template void save_checkpoint(const Model<float>&, const std::string&);
template void save_checkpoint(const Model<double>&, const std::string&);
template std::unique_ptr<Model<float>> load_checkpoint(const std::string&);
template std::unique_ptr<Model<double>> load_checkpoint(const std::string&);
template void load_weights(Model<float>&, const std::string&);
template void load_weights(Model<double>&, const std::string&);

}  // namespace attnseg
