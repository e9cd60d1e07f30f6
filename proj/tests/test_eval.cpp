#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "dmf/data/corpus.hpp"
#include "dmf/eval/figure.hpp"
#include "dmf/eval/metrics.hpp"
#include "dmf/eval/report.hpp"
#include "dmf/frontend/wav.hpp"

using namespace dmf;
using namespace dmf::eval;

namespace {
const std::filesystem::path kFixtures = DMF_FIXTURE_DIR;

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = d(g);
  return x;
}

std::vector<double> speech(double seconds, int fs, std::uint64_t seed) {
  const auto s = data::synth_speech(seconds, fs, seed);
  return {s.begin(), s.end()};
}

std::vector<double> add_noise(const std::vector<double>& x, double snr_db, std::uint64_t seed) {
  auto n = gaussian(x.size(), seed);
  double px = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    px += x[i] * x[i];
    pn += n[i] * n[i];
  }
  const double g = std::sqrt(px / (pn * std::pow(10.0, snr_db / 10.0)));
  for (std::size_t i = 0; i < x.size(); ++i) n[i] = x[i] + g * n[i];
  return n;
}
}  // namespace

TEST_CASE("si_snr reference values", "[eval][si_snr]") {
  const auto ref = gaussian(8000, 1);
  CHECK(si_snr(ref, ref) == kSiSnrCapDb);

  // orthogonal residual with one tenth of the target power
  auto r = ref;
  double mr = 0.0;
  for (double v : r) mr += v / r.size();
  for (auto& v : r) v -= mr;
  auto n = gaussian(r.size(), 2);
  double mn = 0.0;
  for (double v : n) mn += v / n.size();
  for (auto& v : n) v -= mn;
  double dot = 0.0, rr = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    dot += n[i] * r[i];
    rr += r[i] * r[i];
  }
  for (std::size_t i = 0; i < r.size(); ++i) n[i] -= dot / rr * r[i];
  for (double v : n) nn += v * v;
  std::vector<double> est(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) est[i] = r[i] + std::sqrt(rr / (10.0 * nn)) * n[i];
  CHECK(si_snr(est, ref) == Catch::Approx(10.0).margin(0.1));

  CHECK_THROWS_AS(si_snr(std::vector<double>(10, 1.0), std::vector<double>(10, 0.0)), InputError);
  CHECK_THROWS_AS(si_snr(std::vector<double>(10, 1.0), std::vector<double>(9, 1.0)), ShapeError);
  CHECK_THROWS_AS(si_snr(std::vector<double>{}, std::vector<double>{}), InputError);
}

TEST_CASE("si_snr scale invariance", "[eval][si_snr]") {
  const auto ref = speech(1.0, 16000, 3);
  const auto est = add_noise(ref, 3.0, 4);
  const double base = si_snr(est, ref);
  CHECK(base < kSiSnrCapDb);
  // binary scalings commute with every rounding step: identical bits
  for (double c : {2.0, 0.5, 4.0, 0.125, 1024.0}) {
    auto s = est;
    for (auto& v : s) v *= c;
    CHECK(si_snr(s, ref) == base);
  }
  // other factors round the scaled input itself; agreement to rounding level
  for (double c : {3.0, 0.1, 7.3, 1e-3, 123.456}) {
    auto s = est;
    for (auto& v : s) v *= c;
    CHECK(std::abs(si_snr(s, ref) - base) <= 1e-9);
  }
}

TEST_CASE("stoi sanity", "[eval][stoi]") {
  const auto x = speech(2.5, 16000, 5);
  CHECK(stoi(x, x, 16000) >= 0.99);
  CHECK(stoi(x, x, 16000, true) >= 0.99);
  const auto noisy = add_noise(x, -5.0, 6);
  CHECK(stoi(x, noisy, 16000) < stoi(x, x, 16000));
  CHECK(stoi(x, noisy, 16000, true) < stoi(x, x, 16000, true));
  const auto x48 = speech(2.5, 48000, 7);
  CHECK(stoi(x48, x48, 48000) >= 0.99);
  CHECK_THROWS_AS(stoi(std::vector<double>(3000, 0.1), std::vector<double>(3000, 0.1), 16000), InputError);
  CHECK_THROWS_AS(stoi(x, std::vector<double>(10, 0.0), 16000), ShapeError);
}

TEST_CASE("stoi matches the pystoi reference fixtures", "[eval][stoi]") {
  std::ifstream in(kFixtures / "stoi.json");
  REQUIRE(in);
  const auto j = Json::parse(in);
  for (const auto& c : j.at("cases")) {
    const auto clean = frontend::read_wav(kFixtures / c.at("clean").get<std::string>());
    const auto proc = frontend::read_wav(kFixtures / c.at("processed").get<std::string>());
    const int fs = c.at("fs").get<int>();
    REQUIRE(clean.sample_rate_hz == fs);
    INFO(c.at("clean").get<std::string>());
    CHECK(std::abs(stoi(clean.samples, proc.samples, fs) - c.at("stoi").get<double>()) <= 0.01);
    CHECK(std::abs(stoi(clean.samples, proc.samples, fs, true) - c.at("estoi").get<double>()) <= 0.01);
  }
}

TEST_CASE("log-spectral distance", "[eval][lsd]") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(1e-4, 2.0);
  Tensor<double> a({6, 9}), b({6, 9});
  for (auto& v : a.vec()) v = u(g);
  for (auto& v : b.vec()) v = u(g);
  CHECK(lsd(a, a) == 0.0);
  auto scaled = a;
  for (auto& v : scaled.vec()) v *= 10.0;
  CHECK(lsd(a, scaled) == Catch::Approx(10.0).epsilon(1e-12));

  double want = 0.0;
  for (std::size_t t = 0; t < 6; ++t) {
    double s = 0.0;
    for (std::size_t f = 0; f < 9; ++f) {
      const double d = 10.0 * std::log10(b.at(t, f)) - 10.0 * std::log10(a.at(t, f));
      s += d * d;
    }
    want += std::sqrt(s / 9.0) / 6.0;
  }
  CHECK(std::abs(lsd(a, b) - want) <= 1e-9);

  double band = 0.0;
  for (std::size_t t = 0; t < 6; ++t) {
    double s = 0.0;
    for (std::size_t f = 3; f <= 5; ++f) {
      const double d = 10.0 * std::log10(b.at(t, f) / a.at(t, f));
      s += d * d;
    }
    band += std::sqrt(s / 3.0) / 6.0;
  }
  CHECK(std::abs(lsd(a, b, frontend::BinRange{3, 5}) - band) <= 1e-9);
  CHECK_THROWS_AS(lsd(a, Tensor<double>({6, 8})), ShapeError);

  const auto x = speech(1.0, 48000, 9);
  CHECK(lsd_waveforms(x, x, frontend::FrontendConfig::full_band()) == 0.0);

  // bins below the floor on both sides contribute nothing
  Tensor<double> quiet({2, 4}, 1e-30), quieter({2, 4}, 1e-40);
  CHECK(lsd(quiet, quieter) == 0.0);
  Tensor<double> loud({2, 4}, kLsdFloorPower * 100.0);
  CHECK(lsd(loud, quieter) == Catch::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("metric report", "[eval][report]") {
  MetricReport r;
  r.files.push_back({"a", 10.0, 0.9, 2.0, 3.1, std::nullopt, std::nullopt, std::nullopt});
  r.files.push_back({"b", 4.0, 0.7, 4.0, 2.5, std::nullopt, std::nullopt, std::nullopt});
  r.files.push_back({"c", 1.0, 0.5, 3.0, 1.9, 2.0, std::nullopt, std::nullopt});
  r.config = Json{{"preset", "tiny"}};
  r.finalize();
  CHECK(r.clip_count == 3);
  CHECK(r.aggregate.si_snr_db == Catch::Approx(5.0));
  CHECK(r.aggregate.stoi == Catch::Approx(0.7));
  CHECK(r.aggregate.lsd_db == Catch::Approx(3.0));
  REQUIRE(r.aggregate.pesq.has_value());
  CHECK(*r.aggregate.pesq == Catch::Approx(2.5));
  CHECK_FALSE(r.aggregate.csig.has_value());

  const auto back = Json::parse(Json(r).dump()).get<MetricReport>();
  CHECK(back == r);
  const auto dir = std::filesystem::temp_directory_path() / "dmf_report_test";
  std::filesystem::create_directories(dir);
  write_report(dir / "r.json", r);
  CHECK(read_report(dir / "r.json") == r);
  std::filesystem::remove_all(dir);

  auto bad = Json(r);
  bad["schema"] = "something-else/9";
  CHECK_THROWS_AS(bad.get<MetricReport>(), InputError);

  const auto clean = speech(2.0, 16000, 10);
  const auto noisy = add_noise(clean, 0.0, 11);
  const auto m = evaluate_clip("x", noisy, clean, 16000);
  CHECK(m.si_snr_db == Catch::Approx(si_snr(noisy, clean)));
  CHECK(m.stoi > 0.0);
  CHECK(m.stoi < 1.0);
  CHECK(m.lsd_db > 0.0);
}

TEST_CASE("spectrogram figure shares one colour scale", "[eval][figure]") {
  const auto loud = data::synth_speech(1.0, 48000, 12);
  auto quiet = loud;
  for (auto& v : quiet) v *= 0.1f;  // -20 dB
  const std::vector<LabeledWave> waves{{"loud", loud, 48000}, {"quiet", quiet, 48000}};
  const auto fig = render_spectrogram_figure(waves);
  REQUIRE(fig.panels.size() == 2);
  CHECK(fig.db_min == Catch::Approx(fig.db_max - 80.0));

  auto brightest = [&](const PixelRect& r) {
    // the colour map rises monotonically in channel sum
    int best = -1;
    std::array<std::uint8_t, 3> px{};
    for (std::size_t y = r.y; y < r.y + r.height; ++y)
      for (std::size_t x = r.x; x < r.x + r.width; ++x) {
        const auto p = fig.pixel(x, y);
        if (p[0] + p[1] + p[2] > best) {
          best = p[0] + p[1] + p[2];
          px = p;
        }
      }
    return px;
  };
  CHECK(brightest(fig.panels[0]) == colormap(1.0));
  CHECK(brightest(fig.panels[1]) == colormap(60.0 / 80.0));
  CHECK(fig.panels[0].height == 241);

  const auto path = std::filesystem::temp_directory_path() / "dmf_fig_test.png";
  const auto written = emit_spectrogram_figure(waves, path);
  CHECK(std::filesystem::file_size(path) > 1000);
  std::ifstream png(path, std::ios::binary);
  char sig[8];
  png.read(sig, 8);
  CHECK(std::string(sig + 1, 3) == "PNG");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(render_spectrogram_figure({}), InputError);
  CHECK_THROWS_AS(emit_spectrogram_figure(waves, "/nonexistent-dir/x.png"), IoError);
}

TEST_CASE("colour map is monotone in brightness", "[eval][figure]") {
  int prev = -1;
  for (int i = 0; i <= 100; ++i) {
    const auto c = colormap(i / 100.0);
    const int s = c[0] + c[1] + c[2];
    CHECK(s >= prev);
    prev = s;
  }
}
