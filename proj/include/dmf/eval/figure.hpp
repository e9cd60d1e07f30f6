#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "dmf/core/error.hpp"
#include "dmf/data/resample.hpp"
#include "dmf/frontend/stft.hpp"

namespace dmf::eval {

/// One figure panel: a labelled mono waveform.
struct LabeledWave {
  std::string label;
  std::vector<float> samples;
  int sample_rate_hz = 48000;
};

struct FigureOptions {
  double dynamic_range_db = 80.0;  // colour floor = joint max - this
  std::size_t panel_height = 241;  // pixel rows spanning 0-24 kHz
  std::size_t frame_width = 1;     // pixel columns per STFT frame
};

struct PixelRect {
  std::size_t x = 0, y = 0, width = 0, height = 0;
};

/// Rendered RGB raster plus the geometry needed to read it back.
struct Figure {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  std::vector<PixelRect> panels;
  std::vector<std::string> labels;
  double db_max = 0.0;
  double db_min = 0.0;

  std::array<std::uint8_t, 3> pixel(std::size_t x, std::size_t y) const {
    const std::size_t i = 3 * (y * width + x);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
};

/// Perceptually ordered dark-to-bright map; u in [0, 1].
inline std::array<std::uint8_t, 3> colormap(double u) {
  static constexpr std::array<std::array<double, 3>, 6> kStops{{{0, 0, 4},
                                                                 {59, 15, 112},
                                                                 {140, 41, 129},
                                                                 {222, 73, 104},
                                                                 {254, 159, 109},
                                                                 {252, 253, 191}}};
  u = std::clamp(u, 0.0, 1.0);
  const double pos = u * static_cast<double>(kStops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
  const double f = pos - static_cast<double>(i);
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<std::uint8_t>(std::lround(kStops[i][k] + f * (kStops[i + 1][k] - kStops[i][k])));
  return c;
}

namespace detail_figure {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
inline const std::uint8_t* glyph(char ch) {
  static constexpr std::uint8_t kAlpha[26][7] = {
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}};
  static constexpr std::uint8_t kDigit[10][7] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}};
  static constexpr std::uint8_t kSpace[7] = {0, 0, 0, 0, 0, 0, 0};
  static constexpr std::uint8_t kMinus[7] = {0, 0, 0, 0x1F, 0, 0, 0};
  static constexpr std::uint8_t kDot[7] = {0, 0, 0, 0, 0, 0x0C, 0x0C};
  static constexpr std::uint8_t kColon[7] = {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0};
  static constexpr std::uint8_t kUnder[7] = {0, 0, 0, 0, 0, 0, 0x1F};
  static constexpr std::uint8_t kLpar[7] = {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02};
  static constexpr std::uint8_t kRpar[7] = {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08};
  static constexpr std::uint8_t kSlash[7] = {0, 0x01, 0x02, 0x04, 0x08, 0x10, 0};
  static constexpr std::uint8_t kPlus[7] = {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0};
  static constexpr std::uint8_t kUnknown[7] = {0x0E, 0x11, 0x01, 0x02, 0x04, 0, 0x04};
  if (ch >= 'a' && ch <= 'z') return kAlpha[ch - 'a'];
  if (ch >= 'A' && ch <= 'Z') return kAlpha[ch - 'A'];
  if (ch >= '0' && ch <= '9') return kDigit[ch - '0'];
  switch (ch) {
    case ' ': return kSpace;
    case '-': return kMinus;
    case '.': return kDot;
    case ':': return kColon;
    case '_': return kUnder;
    case '(': return kLpar;
    case ')': return kRpar;
    case '/': return kSlash;
    case '+': return kPlus;
    default: return kUnknown;
  }
}

inline void put(Figure& f, std::size_t x, std::size_t y, std::array<std::uint8_t, 3> c) {
  if (x >= f.width || y >= f.height) return;
  const std::size_t i = 3 * (y * f.width + x);
  f.rgb[i] = c[0];
  f.rgb[i + 1] = c[1];
  f.rgb[i + 2] = c[2];
}

inline void text(Figure& f, std::size_t x, std::size_t y, const std::string& s) {
  for (char ch : s) {
    const auto* g = glyph(ch);
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 5; ++c)
        if (g[r] & (0x10 >> c)) put(f, x + c, y + r, {0, 0, 0});
    x += 6;
  }
}

/// Log-power [T][481] of a waveform on the 48 kHz front-end.
inline Tensor<double> db_plane(const LabeledWave& w) {
  if (w.samples.empty()) throw InputError("figure: panel '" + w.label + "' has no samples");
  auto x = w.sample_rate_hz == 48000 ? w.samples : data::resample(w.samples, w.sample_rate_hz, 48000);
  const auto s = frontend::stft(x, frontend::FrontendConfig::full_band());
  Tensor<double> db({s.frames(), s.bins()});
  for (std::size_t i = 0; i < s.size(); ++i) db[i] = 10.0 * std::log10(std::norm(s.values()[i]) + 1e-30);
  return db;
}

}  // namespace detail_figure

/// Stack one spectrogram panel per wave (top to bottom). Colours use a single
/// scale [max - range, max] where max is taken over every panel. Each pixel
/// row shows the loudest of the frequency bins it covers.
inline Figure render_spectrogram_figure(const std::vector<LabeledWave>& waves,
                                        const FigureOptions& opt = {}) {
  using namespace detail_figure;
  if (waves.empty()) throw InputError("figure: no waveforms given");
  if (opt.panel_height < 2 || opt.frame_width == 0 || !(opt.dynamic_range_db > 0.0))
    throw ConfigError("figure: invalid options");

  std::vector<Tensor<double>> planes;
  for (const auto& w : waves) planes.push_back(db_plane(w));
  double top = -std::numeric_limits<double>::infinity();
  std::size_t max_frames = 0;
  for (const auto& p : planes) {
    top = std::max(top, *std::max_element(p.vec().begin(), p.vec().end()));
    max_frames = std::max(max_frames, p.dim(0));
  }

  constexpr std::size_t kLeft = 44, kRight = 60, kLabel = 12, kGap = 8, kBottom = 14, kMinPlot = 132;
  constexpr const char* kFooter = "TIME  10 MS PER FRAME";
  const std::size_t ph = opt.panel_height, pw = std::max(max_frames * opt.frame_width, kMinPlot);
  Figure fig;
  fig.db_max = top;
  fig.db_min = top - opt.dynamic_range_db;
  fig.width = kLeft + pw + kRight;
  fig.height = waves.size() * (kLabel + ph + kGap) + kBottom;
  fig.rgb.assign(fig.width * fig.height * 3, 255);

  const std::size_t bins = planes.front().dim(1);
  for (std::size_t p = 0; p < planes.size(); ++p) {
    const auto& db = planes[p];
    const PixelRect rect{kLeft, p * (kLabel + ph + kGap) + kLabel, db.dim(0) * opt.frame_width, ph};
    fig.panels.push_back(rect);
    fig.labels.push_back(waves[p].label);
    text(fig, kLeft, rect.y - kLabel + 2, waves[p].label);
    for (std::size_t row = 0; row < ph; ++row) {
      const std::size_t b = ph - 1 - row;  // 0 = lowest frequency
      const std::size_t lo = b * bins / ph, hi = std::max(lo + 1, (b + 1) * bins / ph);
      for (std::size_t t = 0; t < db.dim(0); ++t) {
        double v = -std::numeric_limits<double>::infinity();
        for (std::size_t k = lo; k < hi; ++k) v = std::max(v, db.at(t, k));
        const auto c = colormap((v - fig.db_min) / opt.dynamic_range_db);
        for (std::size_t dx = 0; dx < opt.frame_width; ++dx)
          put(fig, rect.x + t * opt.frame_width + dx, rect.y + row, c);
      }
    }
    // frequency ticks every 8 kHz
    for (int khz = 0; khz <= 24; khz += 8) {
      const auto y = rect.y + ph - 1 - static_cast<std::size_t>(std::lround(khz / 24.0 * (ph - 1)));
      for (std::size_t dx = 0; dx < 4; ++dx) put(fig, kLeft - 1 - dx, y, {0, 0, 0});
      const std::string s = std::to_string(khz) + "K";
      const std::size_t ty = std::clamp(y < 3 ? 0 : y - 3, rect.y, rect.y + ph - 7);
      text(fig, kLeft - 6 - 6 * s.size(), ty, s);
    }
  }
  // colour bar with its dB bounds
  const std::size_t bx = kLeft + pw + 8, bh = fig.height - kBottom - kLabel;
  for (std::size_t r = 0; r < bh; ++r) {
    const auto c = colormap(1.0 - static_cast<double>(r) / static_cast<double>(bh - 1));
    for (std::size_t dx = 0; dx < 10; ++dx) put(fig, bx + dx, kLabel + r, c);
  }
  text(fig, bx + 13, kLabel, std::to_string(static_cast<int>(std::lround(fig.db_max))));
  text(fig, bx + 13, kLabel + bh - 7, std::to_string(static_cast<int>(std::lround(fig.db_min))));
  text(fig, bx - 2, fig.height - 10, "DB");
  text(fig, kLeft, fig.height - 10, kFooter);
  return fig;
}

/// Write an RGB figure as PNG; panel labels and the colour bounds are stored
/// as text chunks.
inline void write_png(const std::filesystem::path& path, const Figure& fig) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write figure " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng failed while writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(fig.width), static_cast<png_uint_32>(fig.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::vector<std::string> keys, values;
  for (std::size_t i = 0; i < fig.labels.size(); ++i) {
    keys.push_back("Panel " + std::to_string(i + 1));
    values.push_back(fig.labels[i]);
  }
  keys.push_back("Scale dB");
  values.push_back(std::to_string(fig.db_min) + " .. " + std::to_string(fig.db_max));
  std::vector<png_text> texts(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    texts[i].compression = PNG_TEXT_COMPRESSION_NONE;
    texts[i].key = keys[i].data();
    texts[i].text = values[i].data();
    texts[i].text_length = values[i].size();
  }
  png_set_text(png, info, texts.data(), static_cast<int>(texts.size()));
  png_write_info(png, info);
  for (std::size_t y = 0; y < fig.height; ++y)
    png_write_row(png, const_cast<png_bytep>(fig.rgb.data() + 3 * y * fig.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("close failed for " + path.string());
}

/// Render and write in one call.
inline Figure emit_spectrogram_figure(const std::vector<LabeledWave>& waves,
                                      const std::filesystem::path& out_path,
                                      const FigureOptions& opt = {}) {
  auto fig = render_spectrogram_figure(waves, opt);
  write_png(out_path, fig);
  return fig;
}

}  // namespace dmf::eval
