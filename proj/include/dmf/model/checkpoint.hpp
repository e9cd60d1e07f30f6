#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dmf/model/dmf_net.hpp"

namespace dmf {

// Layout (little-endian):
//   "DMFCKPT1" | u64 architecture hash | u32 len + config JSON | u32 len + meta JSON
//   | per sub-network: u32 len + name, u32 tensor count,
//     per tensor: u32 rank, u64 dims[rank], f32 values
//   | u64 FNV-1a of all preceding bytes

inline constexpr char kCheckpointMagic[8] = {'D', 'M', 'F', 'C', 'K', 'P', 'T', '1'};

struct CheckpointMeta {
  std::string model_version{kModelVersion};
  std::vector<std::string> completed_stages;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  Json extra = Json::object();
};

inline void to_json(Json& j, const CheckpointMeta& m) {
  j = Json{{"model_version", m.model_version},
           {"completed_stages", m.completed_stages},
           {"seed", m.seed},
           {"steps", m.steps},
           {"extra", m.extra}};
}
inline void from_json(const Json& j, CheckpointMeta& m) {
  m.model_version = j.value("model_version", std::string{});
  m.completed_stages = j.value("completed_stages", std::vector<std::string>{});
  m.seed = j.value("seed", std::uint64_t{0});
  m.steps = j.value("steps", std::size_t{0});
  m.extra = j.value("extra", Json::object());
}

namespace detail {

class ByteWriter {
 public:
  template <typename U>
  void put(U v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(U));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void put_raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const std::string& b, std::string name) : b_(b), name_(std::move(name)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, b_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw IoError(name_ + ": truncated checkpoint");
  }
  const std::string& b_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
std::string encode_checkpoint(const DmfNet<T>& model, CheckpointMeta meta) {
  detail::ByteWriter w;
  w.put_raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.put(model.architecture_hash());
  w.put_string(Json(model.config()).dump());
  Json mj = meta;
  std::vector<std::string> frozen;
  for (auto s : kAllSubnets)
    if (model.is_frozen(s)) frozen.emplace_back(subnet_name(s));
  mj["frozen"] = frozen;
  w.put_string(mj.dump());
  for (auto s : kAllSubnets) {
    const auto ps = model.params(s);
    w.put_string(std::string(subnet_name(s)));
    w.put(static_cast<std::uint32_t>(ps.size()));
    for (const auto* p : ps) {
      w.put(static_cast<std::uint32_t>(p->value.rank()));
      for (auto d : p->value.shape()) w.put(static_cast<std::uint64_t>(d));
      for (auto v : p->value.vec()) w.put(static_cast<float>(v));
    }
  }
  const auto h = fnv1a64(w.bytes().data(), w.bytes().size());
  w.put(h);
  return w.bytes();
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const DmfNet<T>& model,
                     const CheckpointMeta& meta = {}) {
  const auto bytes = encode_checkpoint(model, meta);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct CheckpointHeader {
  std::uint64_t arch_hash = 0;
  DmfConfig config;
  CheckpointMeta meta;
  std::vector<std::string> frozen;
};

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline CheckpointHeader read_header(ByteReader& r, const std::string& bytes, const std::string& name) {
  if (bytes.size() < sizeof kCheckpointMagic + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw IoError(name + ": not a DMF checkpoint");
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a64(bytes.data(), bytes.size() - 8) != stored) throw IoError(name + ": checksum mismatch");
  char magic[sizeof kCheckpointMagic];
  r.get_raw(magic, sizeof magic);
  CheckpointHeader h;
  h.arch_hash = r.get<std::uint64_t>();
  try {
    h.config = Json::parse(r.get_string()).get<DmfConfig>();
    const auto mj = Json::parse(r.get_string());
    h.meta = mj.get<CheckpointMeta>();
    h.frozen = mj.value("frozen", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw IoError(name + ": bad header: " + e.what());
  }
  return h;
}

}  // namespace detail

inline CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, path.string());
  return detail::read_header(r, bytes, path.string());
}

/// Restore weights into `model`; refuses when the architecture differs.
template <typename T>
CheckpointMeta load_checkpoint_into(const std::filesystem::path& path, DmfNet<T>& model) {
  const auto bytes = detail::read_file_bytes(path);
  const auto name = path.string();
  detail::ByteReader r(bytes, name);
  const auto h = detail::read_header(r, bytes, name);
  if (h.arch_hash != model.architecture_hash())
    throw ConfigError(name + ": architecture hash mismatch (checkpoint preset '" + h.config.preset +
                      "', model preset '" + model.config().preset + "')");
  for (auto s : kAllSubnets) {
    const auto tag = r.get_string();
    if (tag != subnet_name(s)) throw IoError(name + ": unexpected section '" + tag + "'");
    auto ps = model.params(s);
    const auto count = r.get<std::uint32_t>();
    if (count != ps.size()) throw IoError(name + ": parameter count mismatch in " + tag);
    for (auto* p : ps) {
      const auto rank = r.get<std::uint32_t>();
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
      if (shape != p->value.shape()) throw IoError(name + ": tensor shape mismatch in " + tag);
      for (auto& v : p->value.vec()) v = static_cast<T>(r.get<float>());
    }
  }
  model.unfreeze_all();
  for (const auto& f : h.frozen) model.freeze(parse_subnet(f));
  return h.meta;
}

template <typename T = float>
struct LoadedModel {
  DmfNet<T> model;
  CheckpointMeta meta;
};

/// Build a model from the configuration stored in the checkpoint.
template <typename T = float>
LoadedModel<T> load_checkpoint(const std::filesystem::path& path) {
  const auto h = read_checkpoint_header(path);
  LoadedModel<T> out{DmfNet<T>(h.config), {}};
  out.meta = load_checkpoint_into(path, out.model);
  return out;
}

}  // namespace dmf
