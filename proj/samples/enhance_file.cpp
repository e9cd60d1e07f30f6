// Minimal library use: enhance one 48 kHz WAV with a trained checkpoint.
//   dmf_sample model.ckpt noisy.wav enhanced.wav

#include <iostream>

#include "dmf/frontend/wav.hpp"
#include "dmf/model/checkpoint.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: " << argv[0] << " MODEL.ckpt NOISY.wav OUT.wav\n";
    return 2;
  }
  try {
    const auto loaded = dmf::load_checkpoint<float>(argv[1]);
    const auto noisy = dmf::frontend::read_wav(argv[2]);
    const auto enhanced = loaded.model.full_forward(noisy.samples, noisy.sample_rate_hz);
    dmf::frontend::write_wav(argv[3], enhanced, noisy.sample_rate_hz);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
