#include <iostream>

#include "CLI11.hpp"

#include "dmf/data/corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic desk-scale corpus: clean, noise and RIR WAVs plus a manifest"};
  std::string out;
  dmf::data::CorpusOptions o;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--clips", o.clips, "Number of mixtures")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seconds", o.seconds, "Clip length")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--rate", o.sample_rate_hz, "Sample rate")->capture_default_str()->check(CLI::IsMember({16000, 48000}));
  app.add_option("--snr-min", o.snr_min_db, "Lowest SNR in dB")->capture_default_str();
  app.add_option("--snr-max", o.snr_max_db, "Highest SNR in dB")->capture_default_str();
  app.add_flag("!--dry", o.reverberant, "Skip room impulse responses");
  app.add_option("--rt60-min", o.rt60_min_s, "Shortest RT60 in seconds")->capture_default_str();
  app.add_option("--rt60-max", o.rt60_max_s, "Longest RT60 in seconds")->capture_default_str();
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (o.snr_min_db > o.snr_max_db || o.rt60_min_s > o.rt60_max_s) {
      std::cerr << "usage error: empty SNR or RT60 range\n";
      return 2;
    }
    const auto specs = dmf::data::generate_corpus(out, o);
    std::cout << "wrote " << specs.size() << " mixtures (" << o.seconds * static_cast<double>(specs.size())
              << " s) and " << (std::filesystem::path(out) / "manifest.jsonl").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
