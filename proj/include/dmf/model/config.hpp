#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "dmf/frontend/config.hpp"
#include "dmf/nn/config.hpp"

namespace dmf {

using Json = nlohmann::json;

/// Architecture of the five sub-networks.
struct ModelConfig {
  nn::EncoderConfig encoder;
  nn::StcmConfig stcm;
  std::size_t filter_taps = 5;
  nn::TapOffsets tap_offsets = nn::TapOffsets::current_and_past;
  bool use_sr_net = true;
  /// Start DN/DR filters at the identity (tap 0 bias = 1) instead of a random
  /// linear read-out.
  bool identity_filter_init = true;

  bool operator==(const ModelConfig&) const = default;
};

struct LossConfig {
  double mu = 0.5;
  double alpha = 0.5;

  void validate() const {
    if (!(mu >= 0.0 && mu <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0))
      throw ConfigError("loss weights mu and alpha must lie in [0, 1]");
  }
};

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_lf = 1e-3;
  double lr_full = 5e-4;
  double grad_clip_norm = 5.0;

  void validate() const {
    if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
      throw ConfigError("Adam betas must lie in (0, 1)");
    if (!(epsilon > 0) || !(lr_lf > 0) || !(lr_full > 0)) throw ConfigError("optimizer: non-positive value");
  }
};

struct TrainingConfig {
  std::size_t batch_size = 16;
  double crop_seconds = 3.0;
  std::size_t max_steps = 5000;
  std::size_t patience = 5;  // validations without improvement
  std::size_t validate_every = 100;
  std::uint64_t seed = 20220901;
};

struct DataConfig {
  double early_ms = 50.0;
  double snr_min_db = -5.0;
  double snr_max_db = 15.0;
  std::string train_manifest;     // 48 kHz MixtureSpec JSON-lines
  std::string valid_manifest;     // optional
  std::string pretrain_manifest;  // 16 kHz (or 48 kHz, resampled) set for LF stages
};

struct DmfConfig {
  std::string preset = "full";
  frontend::FrontendConfig frontend = frontend::FrontendConfig::full_band();
  frontend::FrontendConfig lf_frontend = frontend::FrontendConfig::wide_band();
  frontend::BandLayout bands = frontend::BandLayout::equal_thirds(481);
  ModelConfig model;
  LossConfig loss;
  OptimizerConfig optimizer;
  TrainingConfig training;
  DataConfig data;

  /// Full-size model as published: 64 channels, 3 x 6 S-TCMs, batch 16.
  static DmfConfig full() { return {}; }

  /// Desk-scale model for smoke tests: 16 channels, one S-TCM group.
  static DmfConfig tiny() {
    DmfConfig c;
    c.preset = "tiny";
    c.model.encoder.channels = 16;
    c.model.stcm.groups = 1;
    c.model.stcm.bottleneck_channels = 32;
    c.training.batch_size = 4;
    c.training.crop_seconds = 2.0;
    c.training.max_steps = 200;
    c.training.validate_every = 50;
    c.optimizer.lr_lf = 2e-3;
    c.optimizer.lr_full = 1e-3;
    return c;
  }

  static DmfConfig preset_named(const std::string& name) {
    if (name == "full") return full();
    if (name == "tiny") return tiny();
    throw ConfigError("unknown preset '" + name + "' (expected full or tiny)");
  }

  void validate() const {
    frontend.validate();
    lf_frontend.validate();
    bands.validate(frontend.bins());
    const std::size_t band_bins = bands.low.size();
    if (bands.mid.size() != band_bins || bands.high.size() != band_bins)
      throw ConfigError("all three sub-bands must have the same width");
    if (lf_frontend.bins() != band_bins)
      throw ConfigError("LF front-end bin count must equal the low-band width");
    if (model.encoder.input_bins != band_bins)
      throw ConfigError("encoder input_bins must equal the sub-band width");
    if (model.filter_taps == 0) throw ConfigError("filter_taps must be >= 1");
    model.encoder.bin_table();
    model.stcm.validate();
    loss.validate();
    optimizer.validate();
    if (training.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (data.snr_min_db > data.snr_max_db) throw ConfigError("snr range is empty");
  }
};

// --- JSON -------------------------------------------------------------------

namespace frontend {
inline void to_json(Json& j, const FrontendConfig& c) {
  j = Json{{"sample_rate_hz", c.sample_rate_hz},
           {"win_len_samples", c.win_len_samples},
           {"hop_samples", c.hop_samples},
           {"fft_size", c.fft_size},
           {"window", "hann"},
           {"compression_beta", c.compression_beta}};
}
inline void from_json(const Json& j, FrontendConfig& c) {
  c.sample_rate_hz = j.value("sample_rate_hz", c.sample_rate_hz);
  c.win_len_samples = j.value("win_len_samples", c.win_len_samples);
  c.hop_samples = j.value("hop_samples", c.hop_samples);
  c.fft_size = j.value("fft_size", c.fft_size);
  if (j.value("window", std::string("hann")) != "hann") throw ConfigError("only the hann window is supported");
  c.compression_beta = j.value("compression_beta", c.compression_beta);
}
inline void to_json(Json& j, const BandLayout& b) {
  j = Json{{"low", {b.low.first, b.low.last}},
           {"mid", {b.mid.first, b.mid.last}},
           {"high", {b.high.first, b.high.last}},
           {"overlap", b.overlap},
           {"policy", "average"}};
}
inline void from_json(const Json& j, BandLayout& b) {
  auto range = [&](const char* k, BinRange& r) {
    if (j.contains(k)) r = {j.at(k).at(0).get<std::size_t>(), j.at(k).at(1).get<std::size_t>()};
  };
  range("low", b.low);
  range("mid", b.mid);
  range("high", b.high);
  b.overlap = j.value("overlap", b.overlap);
  if (j.value("policy", std::string("average")) != "average") throw ConfigError("only average overlap policy");
}
}  // namespace frontend

namespace nn {
inline void to_json(Json& j, const EncoderConfig& c) {
  j = Json{{"num_blocks", c.num_blocks},
           {"channels", c.channels},
           {"first_kernel_bins", c.first_kernel_bins},
           {"kernel_bins", c.kernel_bins},
           {"input_bins", c.input_bins}};
}
inline void from_json(const Json& j, EncoderConfig& c) {
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.channels = j.value("channels", c.channels);
  c.first_kernel_bins = j.value("first_kernel_bins", c.first_kernel_bins);
  c.kernel_bins = j.value("kernel_bins", c.kernel_bins);
  c.input_bins = j.value("input_bins", c.input_bins);
}
inline void to_json(Json& j, const StcmConfig& c) {
  j = Json{{"groups", c.groups},
           {"blocks_per_group", c.blocks_per_group},
           {"dilations", c.dilations},
           {"bottleneck_channels", c.bottleneck_channels},
           {"temporal_kernel", c.temporal_kernel},
           {"causal", c.causal}};
}
inline void from_json(const Json& j, StcmConfig& c) {
  c.groups = j.value("groups", c.groups);
  c.blocks_per_group = j.value("blocks_per_group", c.blocks_per_group);
  c.dilations = j.value("dilations", c.dilations);
  c.bottleneck_channels = j.value("bottleneck_channels", c.bottleneck_channels);
  c.temporal_kernel = j.value("temporal_kernel", c.temporal_kernel);
  c.causal = j.value("causal", c.causal);
}
}  // namespace nn

inline void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"encoder", c.encoder},
           {"stcm", c.stcm},
           {"filter_taps", c.filter_taps},
           {"tap_offsets", c.tap_offsets == nn::TapOffsets::current_and_past ? "current_and_past"
                                                                             : "past_only"},
           {"use_sr_net", c.use_sr_net},
           {"identity_filter_init", c.identity_filter_init}};
}
inline void from_json(const Json& j, ModelConfig& c) {
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<nn::EncoderConfig>();
  if (j.contains("stcm")) c.stcm = j.at("stcm").get<nn::StcmConfig>();
  c.filter_taps = j.value("filter_taps", c.filter_taps);
  const auto rule = j.value("tap_offsets", std::string("current_and_past"));
  if (rule == "current_and_past")
    c.tap_offsets = nn::TapOffsets::current_and_past;
  else if (rule == "past_only")
    c.tap_offsets = nn::TapOffsets::past_only;
  else
    throw ConfigError("tap_offsets must be current_and_past or past_only");
  c.use_sr_net = j.value("use_sr_net", c.use_sr_net);
  c.identity_filter_init = j.value("identity_filter_init", c.identity_filter_init);
}

inline void to_json(Json& j, const DmfConfig& c) {
  j = Json{{"schema", 1},
           {"preset", c.preset},
           {"frontend", c.frontend},
           {"lf_frontend", c.lf_frontend},
           {"bands", c.bands},
           {"model", c.model},
           {"loss", {{"mu", c.loss.mu}, {"alpha", c.loss.alpha}}},
           {"optimizer",
            {{"beta1", c.optimizer.beta1},
             {"beta2", c.optimizer.beta2},
             {"epsilon", c.optimizer.epsilon},
             {"lr_lf", c.optimizer.lr_lf},
             {"lr_full", c.optimizer.lr_full},
             {"grad_clip_norm", c.optimizer.grad_clip_norm}}},
           {"training",
            {{"batch_size", c.training.batch_size},
             {"crop_seconds", c.training.crop_seconds},
             {"max_steps", c.training.max_steps},
             {"patience", c.training.patience},
             {"validate_every", c.training.validate_every},
             {"seed", c.training.seed}}},
           {"data",
            {{"early_ms", c.data.early_ms},
             {"snr_min_db", c.data.snr_min_db},
             {"snr_max_db", c.data.snr_max_db},
             {"train_manifest", c.data.train_manifest},
             {"valid_manifest", c.data.valid_manifest},
             {"pretrain_manifest", c.data.pretrain_manifest}}}};
}

/// Values absent from `j` fall back to the preset named by j["preset"].
inline void from_json(const Json& j, DmfConfig& c) {
  c = DmfConfig::preset_named(j.value("preset", std::string("full")));
  if (j.contains("frontend")) c.frontend = j.at("frontend").get<frontend::FrontendConfig>();
  if (j.contains("lf_frontend")) c.lf_frontend = j.at("lf_frontend").get<frontend::FrontendConfig>();
  if (j.contains("bands")) c.bands = j.at("bands").get<frontend::BandLayout>();
  if (j.contains("model")) {
    Json merged = c.model;
    merged.merge_patch(j.at("model"));
    c.model = merged.get<ModelConfig>();
  }
  if (j.contains("loss")) {
    c.loss.mu = j["loss"].value("mu", c.loss.mu);
    c.loss.alpha = j["loss"].value("alpha", c.loss.alpha);
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
    c.optimizer.lr_lf = o.value("lr_lf", c.optimizer.lr_lf);
    c.optimizer.lr_full = o.value("lr_full", c.optimizer.lr_full);
    c.optimizer.grad_clip_norm = o.value("grad_clip_norm", c.optimizer.grad_clip_norm);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    c.training.batch_size = t.value("batch_size", c.training.batch_size);
    c.training.crop_seconds = t.value("crop_seconds", c.training.crop_seconds);
    c.training.max_steps = t.value("max_steps", c.training.max_steps);
    c.training.patience = t.value("patience", c.training.patience);
    c.training.validate_every = t.value("validate_every", c.training.validate_every);
    c.training.seed = t.value("seed", c.training.seed);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.data.early_ms = d.value("early_ms", c.data.early_ms);
    c.data.snr_min_db = d.value("snr_min_db", c.data.snr_min_db);
    c.data.snr_max_db = d.value("snr_max_db", c.data.snr_max_db);
    c.data.train_manifest = d.value("train_manifest", c.data.train_manifest);
    c.data.valid_manifest = d.value("valid_manifest", c.data.valid_manifest);
    c.data.pretrain_manifest = d.value("pretrain_manifest", c.data.pretrain_manifest);
  }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of everything that determines parameter shapes and signal flow.
inline std::uint64_t architecture_hash(const DmfConfig& c) {
  const Json j = {{"frontend", c.frontend}, {"lf_frontend", c.lf_frontend},
                  {"bands", c.bands},       {"model", c.model}};
  const std::string s = j.dump();
  return fnv1a64(s.data(), s.size());
}

/// Read a config file; relative manifest paths resolve against its directory.
inline DmfConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  DmfConfig c = j.get<DmfConfig>();
  const auto base = path.parent_path();
  for (auto* s : {&c.data.train_manifest, &c.data.valid_manifest, &c.data.pretrain_manifest})
    if (!s->empty() && std::filesystem::path(*s).is_relative()) *s = (base / *s).string();
  c.validate();
  return c;
}

}  // namespace dmf
