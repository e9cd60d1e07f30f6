#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "dmf/data/batch.hpp"
#include "dmf/data/corpus.hpp"
#include "dmf/data/manifest.hpp"
#include "dmf/data/resample.hpp"
#include "dmf/data/synth.hpp"

using namespace dmf;
using namespace dmf::data;

namespace {
const std::filesystem::path kFixtures = DMF_FIXTURE_DIR;

std::vector<double> tone(double f, double amp, int fs, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

double power(std::span<const double> x, std::size_t from = 0, std::size_t to = 0) {
  if (to == 0) to = x.size();
  double p = 0.0;
  for (std::size_t i = from; i < to; ++i) p += x[i] * x[i];
  return p / static_cast<double>(to - from);
}

/// Least-squares amplitude of a sinusoid at known frequency.
double fit_amplitude(const std::vector<double>& x, double f, int fs, std::size_t from, std::size_t to) {
  double ss = 0, cc = 0, sc = 0, xs = 0, xc = 0;
  for (std::size_t i = from; i < to; ++i) {
    const double w = 2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    const double s = std::sin(w), c = std::cos(w);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    xs += x[i] * s;
    xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (xs * cc - xc * sc) / det, b = (xc * ss - xs * sc) / det;
  return std::hypot(a, b);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};
}  // namespace

TEST_CASE("noise gain follows the SNR definition", "[data][synth]") {
  CHECK(noise_gain_for_snr(1.0, 1.0, 0.0) == 1.0);
  CHECK(noise_gain_for_snr(1.0, 4.0, 10.0) == Catch::Approx(std::sqrt(1.0 / 40.0)).epsilon(1e-15));
  CHECK(noise_gain_for_snr(1.0, 4.0, 10.0) == Catch::Approx(0.1581).margin(1e-4));
  CHECK_THROWS_AS(noise_gain_for_snr(1.0, 0.0, 0.0), InputError);
}

TEST_CASE("synthesis without RIR keeps the clean signal as both targets", "[data][synth]") {
  const auto clean = synth_speech(1.0, 16000, 1);
  const auto noise = synth_noise(NoiseKind::white, 1.5, 16000, 2);
  const auto r = synthesize_pair(clean, noise, {}, 16000, 5.0, 3);
  REQUIRE(r);
  CHECK(r.pair->target_clean == clean);
  CHECK(r.pair->target_denoised_reverberant == clean);
  CHECK(r.pair->noisy.size() == clean.size());
}

TEST_CASE("synthesis with RIR", "[data][synth]") {
  const int fs = 16000;
  const auto clean = synth_speech(1.5, fs, 4);
  const auto noise = synth_noise(NoiseKind::pink, 2.0, fs, 5);
  const auto rir = synth_rir(fs, 0.5, 6);
  const auto r = synthesize_pair(clean, noise, rir, fs, 2.0, 7, 50.0);
  REQUIRE(r);
  const auto& p = *r.pair;
  const std::vector<double> rev(p.target_denoised_reverberant.begin(), p.target_denoised_reverberant.end());
  const std::vector<double> tgt(p.target_clean.begin(), p.target_clean.end());
  CHECK(power(tgt) <= power(rev));

  // oracle: direct convolution with the full and truncated responses
  const std::vector<double> c(clean.begin(), clean.end()), h(rir.begin(), rir.end());
  const std::size_t peak = rir_peak(h), cut = peak + 800 + 1;
  for (std::size_t n : {100u, 5000u, 20000u}) {
    double full = 0.0, early = 0.0;
    for (std::size_t k = 0; k <= n && k < h.size(); ++k) {
      full += h[k] * c[n - k];
      if (k < cut) early += h[k] * c[n - k];
    }
    CHECK(std::abs(rev[n] - full) <= 1e-5);
    CHECK(std::abs(tgt[n] - early) <= 1e-5);
  }

  CHECK_THROWS_AS(synthesize_pair(clean, noise, std::vector<float>(100, 0.0f), fs, 0.0, 1), InputError);
  const auto silent = synthesize_pair(std::vector<float>(1000, 0.0f), noise, {}, fs, 0.0, 1);
  CHECK_FALSE(silent);
  CHECK(silent.skip_reason.find("zero power") != std::string::npos);
}

TEST_CASE("realized SNR matches the request across random specs", "[data][synth]") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> snr(-5.0, 15.0);
  const int fs = 16000;
  double worst = 0.0;
  for (int i = 0; i < 40; ++i) {
    const auto clean = synth_speech(0.8, fs, g());
    const auto noise = synth_noise(static_cast<NoiseKind>(i % 6), 1.2, fs, g());
    const auto rir = i % 2 ? synth_rir(fs, 0.3, g()) : std::vector<float>{};
    const double want = snr(g);
    const auto r = synthesize_pair(clean, noise, rir, fs, want, g());
    REQUIRE(r);
    std::vector<double> s(r.pair->noisy.size()), n(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k] = r.pair->target_denoised_reverberant[k];
      n[k] = static_cast<double>(r.pair->noisy[k]) - s[k];
    }
    worst = std::max(worst, std::abs(measure_snr_db(s, n, fs) - want));
  }
  CHECK(worst <= 0.01);
}

TEST_CASE("synthesis is byte-deterministic per seed", "[data][synth]") {
  TempDir dir("dmf_data_determinism");
  CorpusOptions o;
  o.clips = 2;
  o.seconds = 0.5;
  o.sample_rate_hz = 16000;
  const auto specs = generate_corpus(dir.path, o);
  for (const auto& s : specs) {
    const auto a = synthesize_pair(s), b = synthesize_pair(s);
    REQUIRE(a);
    CHECK(frontend::encode_wav(a.pair->noisy, 16000) == frontend::encode_wav(b.pair->noisy, 16000));
    CHECK(frontend::encode_wav(a.pair->target_clean, 16000) ==
          frontend::encode_wav(b.pair->target_clean, 16000));
  }
  auto other = specs[0];
  other.seed += 1;
  CHECK(synthesize_pair(other).pair->noisy != synthesize_pair(specs[0]).pair->noisy);
}

TEST_CASE("manifest round trip and validation", "[data][manifest]") {
  TempDir dir("dmf_manifest_test");
  CorpusOptions o;
  o.clips = 3;
  o.seconds = 0.3;
  o.sample_rate_hz = 16000;
  const auto specs = generate_corpus(dir.path, o);
  const auto m = read_manifest(dir.path / "manifest.jsonl");
  REQUIRE(m.items.size() == 3);
  CHECK(m.items == specs);
  CHECK_NOTHROW(m.validate(0.0, 5.0));
  CHECK_THROWS_AS(m.validate(10.0, 20.0), InputError);

  auto dup = m;
  dup.items[1].seed = dup.items[0].seed;
  CHECK_THROWS_AS(dup.validate(0.0, 5.0), InputError);
  auto missing = m;
  missing.items[2].clean_path = (dir.path / "nope.wav").string();
  CHECK_THROWS_AS(missing.validate(0.0, 5.0), InputError);

  // relative paths resolve against the manifest location
  {
    std::ofstream out(dir.path / "rel.jsonl");
    out << R"({"clean_path":"clean_0.wav","noise_path":"noise_0.wav","snr_db":1.5,"seed":9})" << "\n\n";
  }
  const auto rel = read_manifest(dir.path / "rel.jsonl");
  REQUIRE(rel.items.size() == 1);
  CHECK(rel.items[0].clean_path == (dir.path / "clean_0.wav").string());
  CHECK_FALSE(rel.items[0].rir_path.has_value());
  {
    std::ofstream out(dir.path / "bad.jsonl");
    out << "{not json}\n";
  }
  CHECK_THROWS_AS(read_manifest(dir.path / "bad.jsonl"), InputError);
  CHECK_THROWS_AS(read_manifest(dir.path / "absent.jsonl"), IoError);
}

TEST_CASE("resampling preserves tones and DC and rejects aliases", "[data][resample]") {
  const auto x = tone(1000.0, 1.0, 48000, 48000);
  const auto y = resample(std::span<const double>(x), 48000, 16000);
  REQUIRE(y.size() == 16000);
  CHECK(fit_amplitude(y, 1000.0, 16000, 1000, 15000) == Catch::Approx(1.0).margin(0.01));

  const std::vector<double> dc(4800, 0.7);
  const auto ydc = resample(std::span<const double>(dc), 48000, 16000);
  for (std::size_t i = 200; i < ydc.size() - 200; ++i) CHECK(std::abs(ydc[i] - 0.7) <= 1e-6);

  const auto hf = tone(23000.0, 1.0, 48000, 48000);
  const auto yhf = resample(std::span<const double>(hf), 48000, 16000);
  CHECK(10.0 * std::log10(power(yhf, 1000, 15000) / power(hf)) <= -40.0);

  const std::vector<float> f48(x.begin(), x.end());
  CHECK(resample_to_16k(f48, 48000).size() == 16000);
  CHECK_THROWS_AS(resample_to_16k(f48, 44100), InputError);
  CHECK_THROWS_AS(resample_to_48k(f48, 22050), InputError);
}

TEST_CASE("16k to 48k to 16k round trip on band-limited audio", "[data][resample]") {
  std::vector<double> x(16000, 0.0);
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> ph(0.0, 6.28);
  for (double f : {220.0, 700.0, 1800.0, 3100.0, 5200.0, 6900.0}) {
    const double p = ph(g);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.2 * std::sin(2.0 * std::numbers::pi * f * i / 16000.0 + p);
  }
  const auto up = resample(std::span<const double>(x), 16000, 48000);
  const auto back = resample(std::span<const double>(up), 48000, 16000);
  REQUIRE(back.size() == x.size());
  double d = 0.0, r = 0.0;
  for (std::size_t i = 800; i < x.size() - 800; ++i) {
    d += (back[i] - x[i]) * (back[i] - x[i]);
    r += x[i] * x[i];
  }
  CHECK(std::sqrt(d / r) <= 1e-3);
}

TEST_CASE("resampling matches the scipy reference fixture", "[data][resample]") {
  std::ifstream in(kFixtures / "resample.json");
  REQUIRE(in);
  const auto j = Json::parse(in);
  const auto x48 = j.at("x48").get<std::vector<double>>();
  const auto x16 = j.at("x16").get<std::vector<double>>();
  for (const auto& c : j.at("cases")) {
    const int from = c.at("from").get<int>(), to = c.at("to").get<int>();
    const auto want = c.at("y").get<std::vector<double>>();
    const auto& x = from == 48000 ? x48 : x16;
    const auto got = resample(std::span<const double>(x), from, to, c.at("rejection_db").get<double>());
    REQUIRE(got.size() == want.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    INFO(from << " -> " << to << " at " << c.at("rejection_db").get<double>() << " dB");
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("batch iterator", "[data][batch]") {
  const int fs = 48000;
  std::vector<TrainingPair> pairs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto clean = synth_speech(3.5, fs, s + 10);
    const auto noise = synth_noise(NoiseKind::white, 4.0, fs, s + 20);
    pairs.push_back(*synthesize_pair(clean, noise, {}, fs, 5.0, s).pair);
  }
  BatchOptions o;
  o.batch_size = 2;
  o.crop_samples = 3 * fs;
  o.seed = 42;
  CHECK(BatchOptions{}.batch_size == 16);

  BatchIterator a(pairs, o), b(pairs, o);
  for (int step = 0; step < 4; ++step) {
    const auto ba = a.next(), bb = b.next();
    REQUIRE(ba.items.size() == 2);
    CHECK(ba.sources == bb.sources);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(ba.items[i].noisy.mag.vec() == bb.items[i].noisy.mag.vec());
      CHECK(ba.items[i].noisy.mag.dim(0) == 300);
      CHECK(ba.items[i].noisy.mag.dim(1) == 481);
    }
  }
  CHECK(a.epoch() >= 1);
  CHECK(frontend::frame_count(144000, frontend::FrontendConfig::full_band()) == 300);

  auto o2 = o;
  o2.seed = 43;
  BatchIterator c(pairs, o2);
  bool differs = false;
  BatchIterator a2(pairs, o);
  for (int step = 0; step < 4; ++step) differs |= c.next().items[0].noisy.mag.vec() != a2.next().items[0].noisy.mag.vec();
  CHECK(differs);

  CHECK_THROWS_AS(BatchIterator({}, o), InputError);
  auto wrong = o;
  wrong.frontend = frontend::FrontendConfig::wide_band();
  BatchIterator w(pairs, wrong);
  CHECK_THROWS_AS(w.next(), ConfigError);
}

TEST_CASE("16 kHz view of a pair", "[data][batch]") {
  const auto clean = synth_speech(1.0, 48000, 30);
  const auto noise = synth_noise(NoiseKind::babble, 1.5, 48000, 31);
  const auto p = *synthesize_pair(clean, noise, {}, 48000, 0.0, 32).pair;
  const auto q = to_16k(p);
  CHECK(q.sample_rate_hz == 16000);
  CHECK(q.noisy.size() == 16000);
  CHECK(q.target_clean.size() == 16000);
  const auto view = spectral_view(q, frontend::FrontendConfig::wide_band());
  CHECK(view.noisy.mag.dim(1) == 161);
  CHECK(view.noisy.mag.dim(0) == 100);
}
