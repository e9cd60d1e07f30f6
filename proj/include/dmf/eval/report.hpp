#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmf/core/error.hpp"
#include "dmf/eval/metrics.hpp"

namespace dmf::eval {

using Json = nlohmann::json;

inline constexpr const char* kReportSchema = "dmf-metric-report/1";

/// Metrics of one enhanced clip against its clean reference. The PESQ-family
/// fields are never computed here; they exist so external scores can be merged.
struct FileMetrics {
  std::string id;
  double si_snr_db = 0.0;
  double stoi = 0.0;
  double lsd_db = 0.0;
  std::optional<double> pesq, csig, cbak, covl;

  bool operator==(const FileMetrics&) const = default;
};

struct Aggregate {
  double si_snr_db = 0.0;
  double stoi = 0.0;
  double lsd_db = 0.0;
  std::optional<double> pesq, csig, cbak, covl;

  bool operator==(const Aggregate&) const = default;
};

struct MetricReport {
  std::string schema = kReportSchema;
  std::vector<FileMetrics> files;
  Aggregate aggregate;
  std::size_t clip_count = 0;
  Json config = Json::object();

  /// Recompute `aggregate` and `clip_count` from `files`. Optional fields
  /// are averaged only when every file carries them.
  void finalize() {
    clip_count = files.size();
    aggregate = {};
    if (files.empty()) return;
    const double n = static_cast<double>(files.size());
    for (const auto& f : files) {
      aggregate.si_snr_db += f.si_snr_db / n;
      aggregate.stoi += f.stoi / n;
      aggregate.lsd_db += f.lsd_db / n;
    }
    auto opt_mean = [&](std::optional<double> FileMetrics::*m) -> std::optional<double> {
      double s = 0.0;
      for (const auto& f : files) {
        if (!(f.*m)) return std::nullopt;
        s += *(f.*m) / n;
      }
      return s;
    };
    aggregate.pesq = opt_mean(&FileMetrics::pesq);
    aggregate.csig = opt_mean(&FileMetrics::csig);
    aggregate.cbak = opt_mean(&FileMetrics::cbak);
    aggregate.covl = opt_mean(&FileMetrics::covl);
  }

  bool operator==(const MetricReport&) const = default;
};

namespace detail_report {
template <class S>
void put_optionals(Json& j, const S& s) {
  if (s.pesq) j["pesq"] = *s.pesq;
  if (s.csig) j["csig"] = *s.csig;
  if (s.cbak) j["cbak"] = *s.cbak;
  if (s.covl) j["covl"] = *s.covl;
}
template <class S>
void get_optionals(const Json& j, S& s) {
  auto get = [&](const char* k, std::optional<double>& v) {
    v.reset();
    if (j.contains(k) && !j.at(k).is_null()) v = j.at(k).get<double>();
  };
  get("pesq", s.pesq);
  get("csig", s.csig);
  get("cbak", s.cbak);
  get("covl", s.covl);
}
}  // namespace detail_report

inline void to_json(Json& j, const FileMetrics& f) {
  j = Json{{"id", f.id}, {"si_snr_db", f.si_snr_db}, {"stoi", f.stoi}, {"lsd_db", f.lsd_db}};
  detail_report::put_optionals(j, f);
}
inline void from_json(const Json& j, FileMetrics& f) {
  f.id = j.at("id").get<std::string>();
  f.si_snr_db = j.at("si_snr_db").get<double>();
  f.stoi = j.at("stoi").get<double>();
  f.lsd_db = j.at("lsd_db").get<double>();
  detail_report::get_optionals(j, f);
}
inline void to_json(Json& j, const Aggregate& a) {
  j = Json{{"si_snr_db", a.si_snr_db}, {"stoi", a.stoi}, {"lsd_db", a.lsd_db}};
  detail_report::put_optionals(j, a);
}
inline void from_json(const Json& j, Aggregate& a) {
  a.si_snr_db = j.at("si_snr_db").get<double>();
  a.stoi = j.at("stoi").get<double>();
  a.lsd_db = j.at("lsd_db").get<double>();
  detail_report::get_optionals(j, a);
}
inline void to_json(Json& j, const MetricReport& r) {
  j = Json{{"schema", r.schema},
           {"clip_count", r.clip_count},
           {"aggregate", r.aggregate},
           {"files", r.files},
           {"config", r.config}};
}
inline void from_json(const Json& j, MetricReport& r) {
  r.schema = j.at("schema").get<std::string>();
  if (r.schema != kReportSchema)
    throw InputError("metric report: unsupported schema '" + r.schema + "'");
  r.clip_count = j.at("clip_count").get<std::size_t>();
  r.aggregate = j.at("aggregate").get<Aggregate>();
  r.files = j.at("files").get<std::vector<FileMetrics>>();
  r.config = j.value("config", Json::object());
}

inline void write_report(const std::filesystem::path& path, const MetricReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report " + path.string());
  out << Json(r).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline MetricReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  try {
    return Json::parse(in).get<MetricReport>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed report " + path.string() + ": " + e.what());
  }
}

/// All metrics for one clip. LSD uses the front-end matching `fs`
/// (48 kHz full band or 16 kHz wide band).
template <typename A, typename B>
FileMetrics evaluate_clip(std::string id, const std::vector<A>& enhanced, const std::vector<B>& clean,
                          int fs, bool extended_stoi = false) {
  if (enhanced.size() != clean.size())
    throw ShapeError("evaluate " + id + ": enhanced has " + std::to_string(enhanced.size()) +
                     " samples, clean has " + std::to_string(clean.size()));
  frontend::FrontendConfig fe;
  if (fs == 16000)
    fe = frontend::FrontendConfig::wide_band();
  else if (fs != 48000)
    throw InputError("evaluate " + id + ": unsupported sample rate " + std::to_string(fs));
  FileMetrics m;
  m.id = std::move(id);
  m.si_snr_db = si_snr(enhanced, clean);
  m.stoi = stoi(clean, enhanced, fs, extended_stoi);
  m.lsd_db = lsd_waveforms(enhanced, clean, fe);
  return m;
}

}  // namespace dmf::eval
