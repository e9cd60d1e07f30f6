#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"

#include "dmf/data/batch.hpp"
#include "dmf/data/manifest.hpp"
#include "dmf/data/resample.hpp"
#include "dmf/eval/figure.hpp"
#include "dmf/eval/report.hpp"
#include "dmf/frontend/wav.hpp"
#include "dmf/model/checkpoint.hpp"
#include "dmf/train/stage.hpp"

namespace fs = std::filesystem;
using namespace dmf;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

frontend::WavFormat parse_format(const std::string& s) {
  if (s == "pcm16") return frontend::WavFormat::pcm16;
  if (s == "pcm24") return frontend::WavFormat::pcm24;
  return frontend::WavFormat::float32;
}

/// --config wins; DMF_CONFIG is the fallback.
std::string resolve_config_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("DMF_CONFIG"); env && *env) return env;
  return {};
}

std::vector<float> to_model_rate(const frontend::WavData& w, int model_rate) {
  if (w.sample_rate_hz == model_rate) return w.samples;
  if (model_rate != 48000) throw ConfigError("model runs at " + std::to_string(model_rate) + " Hz");
  return data::resample_to_48k(w.samples, w.sample_rate_hz);
}

/// Run `fn(i)` for i in [0, n) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string manifest, out;
  double early_ms = 50.0;
  std::optional<std::uint64_t> seed;
  std::string format = "float32";
};

int run_synth(const SynthArgs& a) {
  auto m = data::read_manifest(a.manifest);
  if (a.seed)
    for (std::size_t i = 0; i < m.items.size(); ++i) m.items[i].seed = train::derive_seed(*a.seed, i);
  fs::create_directories(a.out);
  const auto fmt = parse_format(a.format);
  std::ofstream index(fs::path(a.out) / "pairs.jsonl");
  if (!index) throw IoError("cannot write " + (fs::path(a.out) / "pairs.jsonl").string());
  std::size_t written = 0, skipped = 0;
  for (std::size_t i = 0; i < m.items.size(); ++i) {
    const auto& spec = m.items[i];
    const auto r = data::synthesize_pair(spec, a.early_ms);
    if (!r) {
      std::cerr << "skip " << spec.clean_path << ": " << r.skip_reason << '\n';
      ++skipped;
      continue;
    }
    std::ostringstream stem;
    stem << "pair_" << std::setw(4) << std::setfill('0') << i;
    const auto base = fs::path(a.out) / stem.str();
    const auto& p = *r.pair;
    frontend::write_wav(base.string() + "_noisy.wav", p.noisy, p.sample_rate_hz, fmt);
    frontend::write_wav(base.string() + "_reverberant.wav", p.target_denoised_reverberant, p.sample_rate_hz, fmt);
    frontend::write_wav(base.string() + "_clean.wav", p.target_clean, p.sample_rate_hz, fmt);
    index << Json{{"id", stem.str()},
                  {"noisy", stem.str() + "_noisy.wav"},
                  {"target_reverberant", stem.str() + "_reverberant.wav"},
                  {"target_clean", stem.str() + "_clean.wav"},
                  {"sample_rate_hz", p.sample_rate_hz},
                  {"snr_db", p.snr_db},
                  {"noise_gain", p.noise_gain},
                  {"seed", spec.seed}}
                 .dump()
          << '\n';
    ++written;
  }
  std::cout << "synthesized " << written << " pairs into " << a.out;
  if (skipped) std::cout << " (" << skipped << " skipped)";
  std::cout << '\n';
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config, stage, resume, out = "checkpoints";
  std::optional<std::size_t> max_steps;
  std::size_t log_every = 10;
};

std::vector<data::TrainingPair> load_set(const std::string& path, double early_ms, const char* what) {
  if (path.empty()) return {};
  const auto m = data::read_manifest(path);
  auto pairs = data::load_pairs(m, early_ms, [&](const std::string& why) {
    std::cerr << what << ": skipped item (" << why << ")\n";
  });
  if (pairs.empty()) throw InputError(std::string(what) + " manifest " + path + " produced no pairs");
  return pairs;
}

train::PipelineData load_training_data(const DmfConfig& cfg) {
  const auto& d = cfg.data;
  if (d.train_manifest.empty()) throw ConfigError("config has no data.train_manifest");
  const int full_rate = cfg.frontend.sample_rate_hz, lf_rate = cfg.lf_frontend.sample_rate_hz;
  auto train = load_set(d.train_manifest, d.early_ms, "train");
  auto valid = load_set(d.valid_manifest, d.early_ms, "valid");
  for (const auto* set : {&train, &valid})
    for (const auto& p : *set)
      if (p.sample_rate_hz != full_rate)
        throw InputError("training pairs must be " + std::to_string(full_rate) + " Hz, got " +
                         std::to_string(p.sample_rate_hz) + " Hz");
  auto out = train::PipelineData::from_full_band(std::move(train), std::move(valid));
  if (!d.pretrain_manifest.empty()) {
    out.lf_train.clear();
    for (auto& p : load_set(d.pretrain_manifest, d.early_ms, "pretrain"))
      out.lf_train.push_back(p.sample_rate_hz == lf_rate ? std::move(p) : data::to_16k(p));
  }
  return out;
}

int run_train(const TrainArgs& a) {
  const auto cfg_path = resolve_config_path(a.config);
  if (cfg_path.empty()) throw UsageError("train needs --config or the DMF_CONFIG environment variable");
  auto cfg = load_config(cfg_path);
  if (a.max_steps) cfg.training.max_steps = *a.max_steps;

  DmfNet<float> model(cfg);
  CheckpointMeta meta;
  if (!a.resume.empty()) {
    meta = load_checkpoint_into(a.resume, model);
    std::cout << "resumed " << a.resume << " (completed:";
    for (const auto& s : meta.completed_stages) std::cout << ' ' << s;
    std::cout << ")\n";
  }
  const auto data = load_training_data(cfg);
  std::cout << "preset " << cfg.preset << ", " << model.count_parameters() << " parameters, "
            << data.full_train.size() << " full-band and " << data.lf_train.size() << " low-band pairs\n";

  train::RunOptions opt;
  opt.diagnostics_dir = a.out;
  opt.on_step = [&](const train::StepRecord& r) {
    if (r.step % a.log_every == 0 || r.valid_loss)
      std::cout << "  step " << r.step << " loss " << r.loss << " grad " << r.grad_norm
                << (r.valid_loss ? " valid " + std::to_string(*r.valid_loss) : std::string{}) << '\n';
  };
  auto report_stage = [](const train::StageReport& r) {
    std::ostringstream secs;
    secs << std::fixed << std::setprecision(1) << r.seconds;
    std::cout << "stage " << train::stage_name(r.stage) << ": " << r.steps.size() << " steps in "
              << secs.str() << " s";
    if (r.best_step) std::cout << ", best valid " << r.best_valid << " at step " << r.best_step;
    if (r.early_stopped) std::cout << " (early stop)";
    std::cout << '\n';
  };

  if (!a.stage.empty()) {
    const auto s = train::parse_stage(a.stage);
    std::cout << "stage " << a.stage << '\n';
    auto batches = train::stage_batches(model, s, data);
    const auto valid = train::stage_validation(model, s, data);
    const auto r = train::run_stage(model, train::TrainingStage::make(s, cfg), batches, valid, meta, opt);
    const auto path = fs::path(a.out) / (a.stage + ".ckpt");
    save_checkpoint(path, model, meta);
    report_stage(r);
    std::cout << "wrote " << path.string() << '\n';
    return 0;
  }

  std::size_t next = 0;
  for (std::size_t i = 0; i < train::kStageOrder.size(); ++i)
    if (std::find(meta.completed_stages.begin(), meta.completed_stages.end(),
                  train::stage_name(train::kStageOrder[i])) != meta.completed_stages.end())
      next = i + 1;
  if (next == train::kStageOrder.size()) {
    std::cout << "all stages already complete; use --stage to retrain one\n";
    return 0;
  }
  const auto from = train::kStageOrder[next];
  const auto rep = train::run_pipeline(model, data, meta, a.out, opt, from, report_stage);
  save_checkpoint(fs::path(a.out) / "final.ckpt", model, rep.meta);
  std::cout << "wrote " << (fs::path(a.out) / "final.ckpt").string() << '\n';
  return 0;
}

// --- enhance ----------------------------------------------------------------

struct EnhanceArgs {
  std::string in, out, ckpt, format = "float32";
};

int run_enhance(const EnhanceArgs& a) {
  const auto loaded = load_checkpoint<float>(a.ckpt);
  const auto w = frontend::read_wav(a.in);
  const int rate = loaded.model.config().frontend.sample_rate_hz;
  const auto x = to_model_rate(w, rate);
  const auto y = loaded.model.full_forward(x, rate);
  if (const auto dir = fs::path(a.out).parent_path(); !dir.empty()) fs::create_directories(dir);
  frontend::write_wav(a.out, y, rate, parse_format(a.format));
  std::cout << "enhanced " << a.in << " -> " << a.out << " (" << static_cast<double>(y.size()) / rate
            << " s at " << rate << " Hz)\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string pairs, ckpt, report, noisy_report, save_dir;
  double early_ms = 50.0;
  bool extended = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

int run_evaluate(const EvaluateArgs& a) {
  const auto loaded = load_checkpoint<float>(a.ckpt);
  const auto& model = loaded.model;
  const int rate = model.config().frontend.sample_rate_hz;
  const auto m = data::read_manifest(a.pairs);
  if (m.items.empty()) throw InputError("manifest " + a.pairs + " is empty");
  if (!a.save_dir.empty()) fs::create_directories(a.save_dir);

  std::vector<std::optional<eval::FileMetrics>> enhanced(m.items.size()), noisy(m.items.size());
  std::mutex log;
  parallel_for(m.items.size(), a.jobs, [&](std::size_t i) {
    const auto& spec = m.items[i];
    const auto r = data::synthesize_pair(spec, a.early_ms);
    std::ostringstream id;
    id << std::setw(4) << std::setfill('0') << i << '_' << fs::path(spec.clean_path).stem().string();
    if (!r) {
      std::lock_guard lock(log);
      std::cerr << "skip " << id.str() << ": " << r.skip_reason << '\n';
      return;
    }
    const auto& p = *r.pair;
    if (p.sample_rate_hz != rate)
      throw InputError(id.str() + ": pairs must be " + std::to_string(rate) + " Hz for this checkpoint");
    const auto y = model.full_forward(p.noisy, rate);
    enhanced[i] = eval::evaluate_clip(id.str(), y, p.target_clean, rate, a.extended);
    if (!a.noisy_report.empty())
      noisy[i] = eval::evaluate_clip(id.str(), p.noisy, p.target_clean, rate, a.extended);
    if (!a.save_dir.empty()) frontend::write_wav(fs::path(a.save_dir) / (id.str() + ".wav"), y, rate);
    std::lock_guard lock(log);
    std::cout << id.str() << "  si_snr " << enhanced[i]->si_snr_db << " dB  stoi " << enhanced[i]->stoi
              << "  lsd " << enhanced[i]->lsd_db << " dB\n";
  });

  auto build = [&](const std::vector<std::optional<eval::FileMetrics>>& rows, const std::string& what) {
    eval::MetricReport rep;
    for (const auto& r : rows)
      if (r) rep.files.push_back(*r);
    if (rep.files.empty()) throw InputError("no clip in " + a.pairs + " could be evaluated");
    rep.config = {{"model", Json(model.config())},
                  {"checkpoint", a.ckpt},
                  {"manifest", a.pairs},
                  {"signal", what},
                  {"early_ms", a.early_ms},
                  {"extended_stoi", a.extended}};
    rep.finalize();
    return rep;
  };
  const auto rep = build(enhanced, "enhanced");
  eval::write_report(a.report, rep);
  std::cout << "mean over " << rep.clip_count << " clips: si_snr " << rep.aggregate.si_snr_db << " dB, stoi "
            << rep.aggregate.stoi << ", lsd " << rep.aggregate.lsd_db << " dB\nwrote " << a.report << '\n';
  if (!a.noisy_report.empty()) {
    const auto base = build(noisy, "noisy");
    eval::write_report(a.noisy_report, base);
    std::cout << "unprocessed: si_snr " << base.aggregate.si_snr_db << " dB, stoi " << base.aggregate.stoi
              << ", lsd " << base.aggregate.lsd_db << " dB\nwrote " << a.noisy_report << '\n';
  }
  return 0;
}

// --- plot -------------------------------------------------------------------

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string out;
  double range_db = 80.0;
};

int run_plot(const PlotArgs& a) {
  std::vector<eval::LabeledWave> waves;
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const std::string label = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
    auto w = frontend::read_wav(path);
    waves.push_back({label, std::move(w.samples), w.sample_rate_hz});
  }
  eval::FigureOptions opt;
  opt.dynamic_range_db = a.range_db;
  const auto fig = eval::emit_spectrogram_figure(waves, a.out, opt);
  std::cout << "wrote " << a.out << " (" << fig.width << "x" << fig.height << ", " << waves.size()
            << " panels, " << fig.db_min << " to " << fig.db_max << " dB)\n";
  return 0;
}

// --- info -------------------------------------------------------------------

struct InfoArgs {
  std::string ckpt, config, preset = "full";
  bool json = false;
};

int run_info(const InfoArgs& a) {
  std::optional<CheckpointMeta> meta;
  DmfConfig cfg;
  if (!a.ckpt.empty()) {
    const auto h = read_checkpoint_header(a.ckpt);
    cfg = h.config;
    meta = h.meta;
  } else if (const auto path = resolve_config_path(a.config); !path.empty()) {
    cfg = load_config(path);
  } else {
    cfg = DmfConfig::preset_named(a.preset);
  }
  const DmfNet<float> model(cfg);
  auto no_sr_cfg = cfg;
  no_sr_cfg.model.use_sr_net = false;
  const DmfNet<float> no_sr(no_sr_cfg);

  Json j = {{"preset", cfg.preset},
            {"architecture_hash", model.architecture_hash()},
            {"total", model.count_parameters()},
            {"total_without_sr", no_sr.count_parameters()}};
  for (auto s : kAllSubnets) j["subnets"][std::string(subnet_name(s))] = model.count_parameters(s);
  if (meta) {
    j["model_version"] = meta->model_version;
    j["completed_stages"] = meta->completed_stages;
    j["steps"] = meta->steps;
    j["seed"] = meta->seed;
  }
  if (a.json) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "preset        " << cfg.preset << '\n';
  for (auto s : kAllSubnets)
    std::cout << "  " << std::left << std::setw(12) << subnet_name(s) << std::right << std::setw(10)
              << model.count_parameters(s) << '\n';
  auto millions = [](std::size_t n) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(2) << static_cast<double>(n) / 1e6 << " M";
    return o.str();
  };
  std::cout << "total         " << std::setw(10) << model.count_parameters() << "  ("
            << millions(model.count_parameters()) << ")\n"
            << "without SR    " << std::setw(10) << no_sr.count_parameters() << "  ("
            << millions(no_sr.count_parameters()) << ")\n";
  std::cout << "arch hash     " << std::hex << model.architecture_hash() << std::dec << '\n';
  if (meta) {
    std::cout << "version       " << meta->model_version << "\nstages       ";
    for (const auto& s : meta->completed_stages) std::cout << ' ' << s;
    std::cout << "\nsteps         " << meta->steps << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DMF-Net 48 kHz speech denoising and dereverberation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kModelVersion));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Mix clean speech, noise and RIRs from a manifest");
  synth->add_option("--manifest", sa.manifest, "MixtureSpec JSON-lines file")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--early-ms", sa.early_ms, "Early-reflection window after the direct path")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", sa.seed, "Replace item seeds with ones derived from this master seed");
  synth->add_option("--format", sa.format, "WAV sample format")
      ->capture_default_str()->check(CLI::IsMember({"pcm16", "pcm24", "float32"}));

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Run the staged training pipeline or a single stage");
  trn->add_option("--config", ta.config, "Config JSON (falls back to $DMF_CONFIG)");
  trn->add_option("--stage", ta.stage, "Run only this stage")
      ->check(CLI::IsMember({"lf_dn", "lf_dr", "lf_sr", "full_mid_high"}));
  trn->add_option("--resume", ta.resume, "Checkpoint to start from")->check(CLI::ExistingFile);
  trn->add_option("--out", ta.out, "Checkpoint directory")->capture_default_str();
  trn->add_option("--max-steps", ta.max_steps, "Override training.max_steps")->check(CLI::PositiveNumber);
  trn->add_option("--log-every", ta.log_every, "Print every N steps")->capture_default_str()->check(CLI::PositiveNumber);

  EnhanceArgs ea;
  auto* enh = app.add_subcommand("enhance", "Enhance one WAV file");
  enh->add_option("--in", ea.in, "Noisy input WAV (48 kHz or 16 kHz mono)")->required()->check(CLI::ExistingFile);
  enh->add_option("--out", ea.out, "Enhanced output WAV")->required();
  enh->add_option("--ckpt", ea.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  enh->add_option("--format", ea.format, "WAV sample format")
      ->capture_default_str()->check(CLI::IsMember({"pcm16", "pcm24", "float32"}));

  EvaluateArgs va;
  auto* evl = app.add_subcommand("evaluate", "Score a checkpoint on synthesized pairs");
  evl->add_option("--pairs", va.pairs, "MixtureSpec JSON-lines file")->required()->check(CLI::ExistingFile);
  evl->add_option("--ckpt", va.ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  evl->add_option("--report", va.report, "Metric report JSON to write")->required();
  evl->add_option("--noisy-report", va.noisy_report, "Also score the unprocessed mixtures");
  evl->add_option("--save-dir", va.save_dir, "Write enhanced clips here");
  evl->add_option("--early-ms", va.early_ms, "Early-reflection window")->capture_default_str();
  evl->add_flag("--extended-stoi", va.extended, "Report extended STOI");
  evl->add_option("--jobs", va.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  PlotArgs pa;
  auto* plt = app.add_subcommand("plot", "Spectrogram figure with a shared colour scale");
  plt->add_option("inputs", pa.inputs, "WAV files, optionally as label=path")->required();
  plt->add_option("--out", pa.out, "PNG to write")->required();
  plt->add_option("--range-db", pa.range_db, "Dynamic range below the joint maximum")
      ->capture_default_str()->check(CLI::PositiveNumber);

  InfoArgs ia;
  auto* inf = app.add_subcommand("info", "Parameter counts per sub-network");
  inf->add_option("--ckpt", ia.ckpt, "Checkpoint")->check(CLI::ExistingFile);
  inf->add_option("--config", ia.config, "Config JSON (falls back to $DMF_CONFIG)");
  inf->add_option("--preset", ia.preset, "Preset when no checkpoint or config is given")
      ->capture_default_str()->check(CLI::IsMember({"full", "tiny"}));
  inf->add_flag("--json", ia.json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth) return run_synth(sa);
    if (*trn) return run_train(ta);
    if (*enh) return run_enhance(ea);
    if (*evl) return run_evaluate(va);
    if (*plt) return run_plot(pa);
    if (*inf) return run_info(ia);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
