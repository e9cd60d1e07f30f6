#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dmf/core/error.hpp"

namespace dmf::frontend {

// Minimal RIFF/WAVE reader and writer. Mono only; PCM16, PCM24 and IEEE
// float32 are accepted on read. Samples are returned as floats in [-1, 1).

enum class WavFormat { pcm16, pcm24, float32 };

struct WavData {
  int sample_rate_hz = 0;
  std::vector<float> samples;
};

namespace detail_wav {

inline std::uint32_t u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail_wav

inline WavData parse_wav(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  using namespace detail_wav;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InputError(name + ": not a RIFF/WAVE file");

  std::size_t pos = 12;
  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t len = u32le(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size() && std::memcmp(hdr, "data", 4) != 0)
      throw InputError(name + ": truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16) throw InputError(name + ": short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format_tag = u16le(f);
      channels = u16le(f + 2);
      rate = u32le(f + 4);
      bits = u16le(f + 14);
      if (format_tag == 0xFFFE && len >= 26) format_tag = u16le(f + 24);  // extensible
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || data == nullptr) throw InputError(name + ": missing fmt or data chunk");
  if (channels != 1)
    throw InputError(name + ": " + std::to_string(channels) +
                     "-channel audio is not supported; provide mono WAV");

  WavData out;
  out.sample_rate_hz = static_cast<int>(rate);
  if (format_tag == 1 && bits == 16) {
    out.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
      out.samples[i] = static_cast<float>(static_cast<std::int16_t>(u16le(data + 2 * i))) / 32768.0f;
  } else if (format_tag == 1 && bits == 24) {
    out.samples.resize(data_len / 3);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
      const unsigned char* p = data + 3 * i;
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xffffff;
      out.samples[i] = static_cast<float>(v) / 8388608.0f;
    }
  } else if (format_tag == 3 && bits == 32) {
    out.samples.resize(data_len / 4);
    std::memcpy(out.samples.data(), data, out.samples.size() * 4);
  } else {
    throw InputError(name + ": unsupported sample format (tag " + std::to_string(format_tag) +
                     ", " + std::to_string(bits) + " bits)");
  }
  return out;
}

inline WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return parse_wav(bytes, path.string());
}

inline std::string encode_wav(const std::vector<float>& samples, int sample_rate_hz,
                              WavFormat format = WavFormat::float32) {
  using namespace detail_wav;
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : format == WavFormat::pcm24 ? 24 : 32;
  const std::uint16_t tag = format == WavFormat::float32 ? 3 : 1;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_len = static_cast<std::uint32_t>(samples.size() * bytes_per_sample);
  std::string s;
  s.reserve(44 + data_len);
  s += "RIFF";
  put_u32(s, 36 + data_len);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, tag);
  put_u16(s, 1);
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(s, static_cast<std::uint32_t>(sample_rate_hz) * bytes_per_sample);
  put_u16(s, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(s, bits);
  s += "data";
  put_u32(s, data_len);
  for (float v : samples) {
    if (format == WavFormat::float32) {
      char b[4];
      std::memcpy(b, &v, 4);
      s.append(b, 4);
    } else {
      const double full = format == WavFormat::pcm16 ? 32768.0 : 8388608.0;
      const auto q = static_cast<std::int32_t>(std::clamp<double>(std::round(v * full), -full, full - 1.0));
      for (std::uint32_t i = 0; i < bytes_per_sample; ++i)
        s.push_back(static_cast<char>((q >> (8 * i)) & 0xff));
    }
  }
  return s;
}

inline void write_wav(const std::filesystem::path& path, const std::vector<float>& samples,
                      int sample_rate_hz, WavFormat format = WavFormat::float32) {
  const std::string bytes = encode_wav(samples, sample_rate_hz, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dmf::frontend
