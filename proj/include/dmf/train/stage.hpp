#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dmf/model/checkpoint.hpp"
#include "dmf/train/objective.hpp"
#include "dmf/train/optimizer.hpp"

namespace dmf::train {

struct TrainingStage {
  StageName name = StageName::lf_dn;
  std::vector<Subnet> trainable;
  std::vector<Subnet> frozen;
  double lr = 1e-3;
  std::size_t max_steps = 5000;
  std::size_t patience = 5;
  std::size_t validate_every = 100;

  static TrainingStage make(StageName s, const DmfConfig& cfg) {
    TrainingStage st;
    st.name = s;
    st.trainable = stage_trainable(s);
    for (auto n : kAllSubnets)
      if (std::find(st.trainable.begin(), st.trainable.end(), n) == st.trainable.end())
        st.frozen.push_back(n);
    st.lr = is_low_band_stage(s) ? cfg.optimizer.lr_lf : cfg.optimizer.lr_full;
    st.max_steps = cfg.training.max_steps;
    st.patience = cfg.training.patience;
    st.validate_every = cfg.training.validate_every;
    return st;
  }

  void validate() const {
    for (auto t : trainable)
      if (std::find(frozen.begin(), frozen.end(), t) != frozen.end())
        throw ConfigError("stage " + stage_name(name) + ": sub-network " +
                          std::string(subnet_name(t)) + " is both trainable and frozen");
    if (trainable.empty()) throw ConfigError("stage " + stage_name(name) + " trains nothing");
    if (!(lr > 0.0)) throw ConfigError("stage " + stage_name(name) + ": learning rate must be positive");
  }
};

/// Stages that must be complete before `s` may run.
inline std::vector<StageName> prerequisites(StageName s, bool use_sr) {
  std::vector<StageName> out;
  for (auto p : kStageOrder) {
    if (p == s) break;
    if (p == StageName::lf_sr && !use_sr) continue;
    out.push_back(p);
  }
  return out;
}

/// FNV-1a over the raw parameter values of one sub-network.
template <typename T>
std::uint64_t parameter_hash(const DmfNet<T>& model, Subnet s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* p : model.params(s)) h = fnv1a64(p->value.data(), p->size() * sizeof(T), h);
  return h;
}

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> valid_loss;
};

struct StageReport {
  StageName stage = StageName::lf_dn;
  std::vector<StepRecord> steps;
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
  bool early_stopped = false;
  double seconds = 0.0;
};

struct RunOptions {
  std::function<void(const StepRecord&)> on_step;
  std::filesystem::path diagnostics_dir = ".";
  bool restore_best = true;
};

namespace detail {

template <typename T>
[[noreturn]] void abort_non_finite(const DmfNet<T>& model, const TrainingStage& st,
                                   const StepRecord& rec, const RunOptions& opt) {
  Json d = {{"stage", stage_name(st.name)},
            {"step", rec.step},
            {"loss", std::isfinite(rec.loss) ? Json(rec.loss) : Json(std::to_string(rec.loss))},
            {"grad_norm",
             std::isfinite(rec.grad_norm) ? Json(rec.grad_norm) : Json(std::to_string(rec.grad_norm))}};
  Json per = Json::object();
  for (auto s : st.trainable) {
    std::size_t bad = 0;
    double norm = 0.0;
    for (const auto* p : model.params(s))
      for (auto g : p->grad.vec()) {
        if (!std::isfinite(static_cast<double>(g))) ++bad;
        else norm += static_cast<double>(g) * static_cast<double>(g);
      }
    per[std::string(subnet_name(s))] = {{"non_finite_grads", bad}, {"finite_grad_norm", std::sqrt(norm)}};
  }
  d["subnets"] = per;
  std::filesystem::create_directories(opt.diagnostics_dir);
  const auto path = opt.diagnostics_dir / ("nan_dump_" + stage_name(st.name) + ".json");
  std::ofstream(path) << d.dump(2) << '\n';
  throw NumericError("non-finite loss in stage " + stage_name(st.name) + " at step " +
                     std::to_string(rec.step) + "; diagnostics written to " + path.string());
}

template <typename T>
std::vector<Tensor<T>> snapshot(const nn::ParamList<T>& ps) {
  std::vector<Tensor<T>> s;
  for (const auto* p : ps) s.push_back(p->value);
  return s;
}

template <typename T>
void restore(const nn::ParamList<T>& ps, const std::vector<Tensor<T>>& s) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = s[i];
}

}  // namespace detail

/// Train the stage's sub-networks with every other sub-network frozen.
template <typename T>
StageReport run_stage(DmfNet<T>& model, const TrainingStage& st, data::BatchIterator& train,
                      const std::vector<data::SpectralItem>& valid, CheckpointMeta& meta,
                      const RunOptions& opt = {}) {
  st.validate();
  for (auto p : prerequisites(st.name, model.has_sr()))
    if (std::find(meta.completed_stages.begin(), meta.completed_stages.end(), stage_name(p)) ==
        meta.completed_stages.end())
      throw ConfigError("stage " + stage_name(st.name) + " needs a checkpoint that completed " +
                        stage_name(p));
  if (st.name == StageName::lf_sr && !model.has_sr())
    throw ConfigError("stage lf_sr requested but the SR sub-network is disabled");
  const auto expected_rate = is_low_band_stage(st.name) ? model.config().lf_frontend.sample_rate_hz
                                                        : model.config().frontend.sample_rate_hz;
  if (train.options().frontend.sample_rate_hz != expected_rate)
    throw ConfigError("stage " + stage_name(st.name) + " expects " + std::to_string(expected_rate) +
                      " Hz batches");

  model.unfreeze_all();
  for (auto s : st.frozen) model.freeze(s);

  nn::ParamList<T> params;
  for (auto s : st.trainable)
    for (auto* p : model.params(s)) params.push_back(p);
  Adam<T> adam(params, model.config().optimizer, st.lr);

  StageReport rep;
  rep.stage = st.name;
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::vector<Tensor<T>>> best;
  std::size_t stale = 0;

  for (std::size_t step = 1; step <= st.max_steps; ++step) {
    const auto batch = train.next();
    adam.zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.items.size());
    StepRecord rec;
    rec.step = step;
    for (const auto& item : batch.items) rec.loss += stage_loss(model, st.name, item, true, inv) * inv;
    rec.grad_norm = clip_grad_norm(params, model.config().optimizer.grad_clip_norm);
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm))
      detail::abort_non_finite(model, st, rec, opt);
    adam.step();

    const bool validate_now = !valid.empty() && st.validate_every &&
                              (step % st.validate_every == 0 || step == st.max_steps);
    if (validate_now) {
      rec.valid_loss = mean_stage_loss(model, st.name, valid);
      if (*rec.valid_loss < rep.best_valid) {
        rep.best_valid = *rec.valid_loss;
        rep.best_step = step;
        best = detail::snapshot(params);
        stale = 0;
      } else if (++stale > st.patience) {
        rep.early_stopped = true;
      }
    }
    rep.steps.push_back(rec);
    if (opt.on_step) opt.on_step(rec);
    if (rep.early_stopped) break;
  }
  if (best && opt.restore_best) detail::restore(params, *best);

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto name = stage_name(st.name);
  if (std::find(meta.completed_stages.begin(), meta.completed_stages.end(), name) ==
      meta.completed_stages.end())
    meta.completed_stages.push_back(name);
  meta.steps += rep.steps.size();
  return rep;
}

/// Signals for both front-ends: 16 kHz pairs for the LF stages, full-band
/// pairs for the mid/high stage.
struct PipelineData {
  std::vector<data::TrainingPair> lf_train, lf_valid;
  std::vector<data::TrainingPair> full_train, full_valid;

  /// Derive the LF sets by resampling the full-band pairs.
  static PipelineData from_full_band(std::vector<data::TrainingPair> train,
                                     std::vector<data::TrainingPair> valid = {}) {
    PipelineData d;
    for (const auto& p : train) d.lf_train.push_back(data::to_16k(p));
    for (const auto& p : valid) d.lf_valid.push_back(data::to_16k(p));
    d.full_train = std::move(train);
    d.full_valid = std::move(valid);
    return d;
  }
};

/// Independent stream seeds derived from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (purpose + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename T>
data::BatchIterator stage_batches(const DmfNet<T>& model, StageName s, const PipelineData& d) {
  const auto& cfg = model.config();
  const bool low = is_low_band_stage(s);
  data::BatchOptions o;
  o.batch_size = cfg.training.batch_size;
  o.frontend = low ? cfg.lf_frontend : cfg.frontend;
  o.crop_samples = static_cast<std::size_t>(cfg.training.crop_seconds * o.frontend.sample_rate_hz);
  o.seed = derive_seed(cfg.training.seed, 100 + static_cast<std::uint64_t>(s));
  return data::BatchIterator(low ? d.lf_train : d.full_train, o);
}

template <typename T>
std::vector<data::SpectralItem> stage_validation(const DmfNet<T>& model, StageName s,
                                                 const PipelineData& d) {
  const auto& cfg = model.config();
  const bool low = is_low_band_stage(s);
  const auto& fe = low ? cfg.lf_frontend : cfg.frontend;
  const auto crop = static_cast<std::size_t>(cfg.training.crop_seconds * fe.sample_rate_hz);
  std::vector<data::SpectralItem> out;
  for (const auto& p : low ? d.lf_valid : d.full_valid) out.push_back(data::spectral_view(p, fe, 0, crop));
  return out;
}

struct PipelineReport {
  std::vector<StageReport> stages;
  CheckpointMeta meta;
};

/// lf_dn -> lf_dr -> lf_sr -> full_mid_high, starting at `from`; writes
/// `<stage>.ckpt` into `ckpt_dir` after each stage.
template <typename T>
PipelineReport run_pipeline(DmfNet<T>& model, const PipelineData& data, CheckpointMeta meta,
                            const std::filesystem::path& ckpt_dir, const RunOptions& opt = {},
                            StageName from = StageName::lf_dn,
                            const std::function<void(const StageReport&)>& on_stage = {}) {
  PipelineReport rep;
  meta.seed = model.config().training.seed;
  meta.extra["seeds"] = {{"init", model.config().training.seed},
                         {"data_lf_dn", derive_seed(meta.seed, 100)},
                         {"data_lf_dr", derive_seed(meta.seed, 101)},
                         {"data_lf_sr", derive_seed(meta.seed, 102)},
                         {"data_full_mid_high", derive_seed(meta.seed, 103)}};
  bool started = false;
  for (auto s : kStageOrder) {
    started = started || s == from;
    if (!started) continue;
    if (s == StageName::lf_sr && !model.has_sr()) continue;
    auto batches = stage_batches(model, s, data);
    const auto valid = stage_validation(model, s, data);
    auto r = run_stage(model, TrainingStage::make(s, model.config()), batches, valid, meta, opt);
    if (!ckpt_dir.empty()) save_checkpoint(ckpt_dir / (stage_name(s) + ".ckpt"), model, meta);
    if (on_stage) on_stage(r);
    rep.stages.push_back(std::move(r));
  }
  rep.meta = meta;
  return rep;
}

}  // namespace dmf::train
