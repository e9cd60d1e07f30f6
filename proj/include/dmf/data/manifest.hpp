#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmf/core/error.hpp"

namespace dmf::data {

using Json = nlohmann::json;

/// Recipe for one noisy/clean training pair.
struct MixtureSpec {
  std::string clean_path;
  std::string noise_path;
  std::optional<std::string> rir_path;
  double snr_db = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const MixtureSpec&) const = default;
};

inline void to_json(Json& j, const MixtureSpec& m) {
  j = Json{{"clean_path", m.clean_path},
           {"noise_path", m.noise_path},
           {"snr_db", m.snr_db},
           {"seed", m.seed}};
  if (m.rir_path) j["rir_path"] = *m.rir_path;
}

inline void from_json(const Json& j, MixtureSpec& m) {
  m.clean_path = j.at("clean_path").get<std::string>();
  m.noise_path = j.at("noise_path").get<std::string>();
  m.rir_path.reset();
  if (j.contains("rir_path") && !j["rir_path"].is_null()) m.rir_path = j["rir_path"].get<std::string>();
  m.snr_db = j.at("snr_db").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
}

enum class Split { train, valid, test };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "'");
}

struct Manifest {
  std::vector<MixtureSpec> items;
  Split split = Split::train;

  /// Paths exist, seeds are unique, SNRs lie in [snr_min, snr_max].
  void validate(double snr_min_db, double snr_max_db) const {
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& m = items[i];
      const auto where = "manifest record " + std::to_string(i + 1);
      for (const auto* p : {&m.clean_path, &m.noise_path})
        if (!std::filesystem::exists(*p)) throw InputError(where + ": missing file " + *p);
      if (m.rir_path && !std::filesystem::exists(*m.rir_path))
        throw InputError(where + ": missing file " + *m.rir_path);
      if (!seeds.insert(m.seed).second) throw InputError(where + ": duplicate seed");
      if (m.snr_db < snr_min_db || m.snr_db > snr_max_db)
        throw InputError(where + ": snr_db " + std::to_string(m.snr_db) + " outside configured range");
    }
  }
};

namespace detail {
inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}
}  // namespace detail

/// JSON-lines reader; relative paths resolve against the manifest's directory.
inline Manifest read_manifest(const std::filesystem::path& path, Split split = Split::train) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.split = split;
  const auto base = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto spec = Json::parse(line).get<MixtureSpec>();
      spec.clean_path = detail::resolve(base, spec.clean_path);
      spec.noise_path = detail::resolve(base, spec.noise_path);
      if (spec.rir_path) spec.rir_path = detail::resolve(base, *spec.rir_path);
      m.items.push_back(std::move(spec));
    } catch (const Json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

namespace detail_manifest {
/// `p` relative to `base` when it lies below it, otherwise absolute.
inline std::string portable_path(const std::string& p, const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  const auto abs = fs::absolute(p).lexically_normal();
  const auto rel = abs.lexically_relative(fs::absolute(base).lexically_normal());
  if (rel.empty() || *rel.begin() == "..") return abs.string();
  return rel.string();
}
}  // namespace detail_manifest

/// Paths below the manifest's directory are stored relative to it.
inline void write_manifest(const std::filesystem::path& path, const std::vector<MixtureSpec>& items) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const auto base = path.parent_path();
  for (auto m : items) {
    m.clean_path = detail_manifest::portable_path(m.clean_path, base);
    m.noise_path = detail_manifest::portable_path(m.noise_path, base);
    if (m.rir_path) m.rir_path = detail_manifest::portable_path(*m.rir_path, base);
    out << Json(m).dump() << '\n';
  }
}

/// Noisy/reference file pair for evaluation.
struct EvalPair {
  std::string id;
  std::string noisy_path;
  std::string clean_path;
};

inline std::vector<EvalPair> read_eval_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair list " + path.string());
  std::vector<EvalPair> out;
  const auto base = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = Json::parse(line);
      EvalPair p;
      p.noisy_path = detail::resolve(base, j.at("noisy_path").get<std::string>());
      p.clean_path = detail::resolve(base, j.at("clean_path").get<std::string>());
      p.id = j.value("id", std::filesystem::path(p.noisy_path).stem().string());
      out.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw InputError(path.string() + ": no pairs");
  return out;
}

inline void write_eval_pairs(const std::filesystem::path& path, const std::vector<EvalPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write pair list " + path.string());
  for (const auto& p : pairs)
    out << Json{{"id", p.id}, {"noisy_path", p.noisy_path}, {"clean_path", p.clean_path}}.dump() << '\n';
}

}  // namespace dmf::data
