#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "dmf/data/corpus.hpp"
#include "dmf/model/checkpoint.hpp"
#include "dmf/model/dmf_net.hpp"

using namespace dmf;

namespace {
std::vector<float> noise_wave(std::size_t n, std::uint64_t seed, float sigma = 0.1f) {
  std::mt19937_64 g(seed);
  std::normal_distribution<float> d(0.0f, sigma);
  std::vector<float> x(n);
  for (auto& v : x) v = d(g);
  return x;
}

Tensor<float> random_mag(std::size_t frames, std::size_t bins, std::mt19937_64& g) {
  // log-uniform over six decades reaches saturated gains
  std::uniform_real_distribution<float> e(-4.0f, 2.0f);
  Tensor<float> t({frames, bins});
  for (auto& v : t.vec()) v = std::pow(10.0f, e(g));
  return t;
}

template <typename T>
std::vector<std::vector<T>> all_values(const DmfNet<T>& m) {
  std::vector<std::vector<T>> out;
  for (auto s : kAllSubnets)
    for (const auto* p : m.params(s)) out.push_back(p->value.vec());
  return out;
}
}  // namespace

TEST_CASE("default parameter counts match the published sizes", "[model][params]") {
  const DmfNet<float> full(DmfConfig::full());
  auto cfg = DmfConfig::full();
  cfg.model.use_sr_net = false;
  const DmfNet<float> no_sr(cfg);
  const double total = static_cast<double>(full.count_parameters());
  const double without = static_cast<double>(no_sr.count_parameters());
  INFO("total " << total << ", without SR " << without);
  CHECK(total >= 0.8 * 7.84e6);
  CHECK(total <= 1.2 * 7.84e6);
  CHECK(without >= 0.8 * 5.45e6);
  CHECK(without <= 1.2 * 5.45e6);
  CHECK(total - without == static_cast<double>(full.count_parameters(Subnet::sr)));
  CHECK(full.count_parameters(Subnet::sr) > 0);
  CHECK(no_sr.count_parameters(Subnet::sr) == 0);
  for (auto s : {Subnet::dn, Subnet::dr, Subnet::mf, Subnet::hf}) CHECK(full.count_parameters(s) > 0);

  const DmfNet<float> tiny(DmfConfig::tiny());
  CHECK(tiny.count_parameters() < full.count_parameters() / 5);
}

TEST_CASE("full_forward is causal up to the synthesis latency", "[model][causality]") {
  const auto cfg = DmfConfig::tiny();
  const DmfNet<float> model(cfg, 11);
  const std::size_t hop = cfg.frontend.hop_samples, latency = cfg.frontend.win_len_samples - hop;
  const auto x = noise_wave(48000 / 2, 12);
  const auto y = model.full_forward(x, 48000);
  REQUIRE(y.size() == x.size());
  for (std::size_t cut : {20 * hop, 30 * hop, 45 * hop}) {
    auto xp = x;
    const auto extra = noise_wave(x.size() - cut, cut);
    for (std::size_t i = cut; i < x.size(); ++i) xp[i] += extra[i - cut];
    const auto yp = model.full_forward(xp, 48000);
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < cut - latency; ++i) before = std::max(before, double(std::abs(yp[i] - y[i])));
    for (std::size_t i = cut; i < x.size(); ++i) after = std::max(after, double(std::abs(yp[i] - y[i])));
    INFO("cut " << cut);
    CHECK(before <= 1e-6);
    CHECK(after > 1e-3);
  }
}

TEST_CASE("mid/high gains obey the masking contract", "[model][mask]") {
  const DmfNet<float> model(DmfConfig::tiny(), 13);
  std::mt19937_64 g(14);
  float lo = 1.0f, hi = 0.0f;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t frames = 1 + trial % 4;
    const auto mid = random_mag(frames, 161, g), high = random_mag(frames, 161, g);
    const auto lf = random_mag(frames, 161, g);
    const auto gm = model.mf_gain(mid, lf);
    const auto em = model.mf_forward(mid, lf);
    const auto gh = model.hf_gain(high, lf, em);
    const auto eh = model.hf_forward(high, lf, em);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      REQUIRE(gm[i] > 0.0f);
      REQUIRE(gm[i] < 1.0f);
      REQUIRE(gh[i] > 0.0f);
      REQUIRE(gh[i] < 1.0f);
      REQUIRE(em[i] <= mid[i]);
      REQUIRE(eh[i] <= high[i]);
      lo = std::min({lo, gm[i], gh[i]});
      hi = std::max({hi, gm[i], gh[i]});
    }
  }
  CHECK(lo < hi);
}

TEST_CASE("mid and high bins keep the noisy phase", "[model][phase]") {
  const auto cfg = DmfConfig::tiny();
  const DmfNet<float> model(cfg, 15);
  const auto x = noise_wave(48000 / 4, 16);
  ForwardTrace<float> tr;
  model.full_forward(x, 48000, &tr);
  const auto& b = cfg.bands;
  const auto& v = tr.fused.values();
  const std::size_t bins = tr.noisy.mag.dim(1);
  std::size_t checked = 0;
  for (std::size_t t = 0; t < tr.noisy.mag.dim(0); ++t)
    for (std::size_t f = b.low.last + 1; f < bins; ++f) {
      if (f >= b.high.first && f <= b.mid.last) continue;  // averaged overlap
      const bool in_mid = f <= b.mid.last;
      const double mag = in_mid ? tr.mid_mag.at(t, f - b.mid.first) : tr.high_mag.at(t, f - b.high.first);
      const auto want = std::polar(mag, tr.noisy.phase.at(t, f));
      REQUIRE(v[t * bins + f] == want);
      ++checked;
    }
  CHECK(checked > 0);
}

TEST_CASE("low-band refinement adds the SR residual to the DR estimate", "[model]") {
  auto cfg = DmfConfig::tiny();
  std::mt19937_64 g(17);
  frontend::CompressedSpectrum in{tensor_cast<double>(random_mag(6, 161, g)), frontend::Plane({6, 161})};
  std::uniform_real_distribution<double> ph(-3.1, 3.1);
  for (auto& p : in.phase.vec()) p = ph(g);

  const DmfNet<float> with(cfg, 18);
  const auto o = with.lf_forward(in);
  REQUIRE(o.residual_re.size() == o.dr_mag.size());
  const auto base = frontend::ComplexSpectrogram::from_polar(tensor_cast<double>(o.dr_mag), o.phase);
  for (std::size_t i = 0; i < base.values().size(); ++i) {
    const auto want = base.values()[i] + frontend::Complex(o.residual_re[i], o.residual_im[i]);
    REQUIRE(o.refined.values()[i] == want);
  }

  cfg.model.use_sr_net = false;
  const DmfNet<float> without(cfg, 18);
  const auto p = without.lf_forward(in);
  CHECK(p.residual_re.empty());
  CHECK(p.refined.values() ==
        frontend::ComplexSpectrogram::from_polar(tensor_cast<double>(p.dr_mag), p.phase).values());
  for (float m : p.dn_mag.vec()) CHECK(m >= 0.0f);
}

TEST_CASE("identity filter init starts near a pass-through", "[model]") {
  const DmfNet<float> model(DmfConfig::tiny(), 19);
  std::mt19937_64 g(20);
  const auto x = random_mag(8, 161, g);
  const auto y = filter_magnitude(model.dn.forward(stack_planes<float>({&x})), x, nn::TapOffsets::current_and_past);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (y[i] - x[i]) * (y[i] - x[i]);
    den += x[i] * x[i];
  }
  CHECK(std::sqrt(num / den) < 0.5);
}

TEST_CASE("checkpoint round trip", "[model][checkpoint]") {
  const auto dir = std::filesystem::temp_directory_path() / "dmf_ckpt_test";
  std::filesystem::remove_all(dir);
  DmfNet<float> a(DmfConfig::tiny(), 21);
  a.freeze(Subnet::dn);
  a.freeze(Subnet::dr);
  CheckpointMeta meta;
  meta.completed_stages = {"lf_dn", "lf_dr"};
  meta.steps = 400;
  save_checkpoint(dir / "a.ckpt", a, meta);

  DmfNet<float> b(DmfConfig::tiny(), 22);
  REQUIRE(all_values(a) != all_values(b));
  const auto got = load_checkpoint_into(dir / "a.ckpt", b);
  CHECK(all_values(a) == all_values(b));
  CHECK(got.completed_stages == meta.completed_stages);
  CHECK(got.steps == 400);
  CHECK(got.model_version == kModelVersion);
  CHECK(b.frozen_flags() == a.frozen_flags());

  const auto loaded = load_checkpoint<float>(dir / "a.ckpt");
  CHECK(loaded.model.config().preset == "tiny");
  CHECK(all_values(loaded.model) == all_values(a));
  CHECK(read_checkpoint_header(dir / "a.ckpt").arch_hash == a.architecture_hash());

  auto cfg = DmfConfig::tiny();
  cfg.model.use_sr_net = false;
  DmfNet<float> other(cfg);
  CHECK(other.architecture_hash() != a.architecture_hash());
  CHECK_THROWS_AS(load_checkpoint_into(dir / "a.ckpt", other), ConfigError);

  // a single flipped byte fails the checksum
  std::string bytes;
  {
    std::ifstream in(dir / "a.ckpt", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(dir / "bad.ckpt", std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_checkpoint_into(dir / "bad.ckpt", b), IoError);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "junk.ckpt"), IoError);
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "missing.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration JSON and presets", "[model][config]") {
  const auto tiny = DmfConfig::tiny();
  const auto back = Json::parse(Json(tiny).dump()).get<DmfConfig>();
  CHECK(Json(back) == Json(tiny));
  CHECK(architecture_hash(back) == architecture_hash(tiny));
  CHECK(architecture_hash(tiny) != architecture_hash(DmfConfig::full()));

  const auto partial = Json::parse(R"({"preset":"tiny","loss":{"mu":0.25},"model":{"use_sr_net":false}})")
                           .get<DmfConfig>();
  CHECK(partial.loss.mu == 0.25);
  CHECK(partial.loss.alpha == tiny.loss.alpha);
  CHECK_FALSE(partial.model.use_sr_net);
  CHECK(partial.model.encoder.channels == 16);

  CHECK_THROWS_AS(DmfConfig::preset_named("huge"), ConfigError);
  auto bad = tiny;
  bad.loss.mu = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny;
  bad.model.encoder.input_bins = 160;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(DmfNet<float>(bad), ConfigError);
  CHECK_THROWS_AS(Json::parse(R"({"model":{"tap_offsets":"future"}})").get<DmfConfig>(), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "dmf_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"preset":"tiny","data":{"train_manifest":"m/train.jsonl"}})";
  const auto c = load_config(dir / "c.json");
  CHECK(c.data.train_manifest == (dir / "m/train.jsonl").string());
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "none.json"), IoError);
  std::filesystem::remove_all(dir);

  CHECK(parse_subnet("mf") == Subnet::mf);
  CHECK_THROWS_AS(parse_subnet("xx"), ConfigError);
}

TEST_CASE("full_forward input validation", "[model]") {
  const DmfNet<float> model(DmfConfig::tiny(), 23);
  CHECK_THROWS_AS(model.full_forward(std::vector<float>(1000, 0.0f), 16000), ConfigError);
  CHECK_THROWS_AS(model.full_forward({}, 48000), InputError);
  // without the additive SR residual every stage is a gain on the input
  auto cfg = DmfConfig::tiny();
  cfg.model.use_sr_net = false;
  const DmfNet<float> masks_only(cfg, 23);
  const auto y = masks_only.full_forward(std::vector<float>(4800, 0.0f), 48000);
  for (float v : y) CHECK(v == 0.0f);
}
