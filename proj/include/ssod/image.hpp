#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssod {

/// Grayscale image, row-major, intensities in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  void clamp01() {
    for (double& p : pixels) p = std::clamp(p, 0.0, 1.0);
  }
};

/// Write a 16-bit binary PGM (P5, maxval 65535, big-endian samples).
inline void write_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (double p : img.pixels) {
    const auto v = static_cast<std::uint16_t>(
        std::clamp(p, 0.0, 1.0) * 65535.0 + 0.5);
    const unsigned char hi = static_cast<unsigned char>(v >> 8);
    const unsigned char lo = static_cast<unsigned char>(v & 0xff);
    out.put(static_cast<char>(hi));
    out.put(static_cast<char>(lo));
  }
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

inline Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm: not a P5 file: " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 65535) {
    throw std::runtime_error("read_pgm: bad header in " + path);
  }
  in.get();  // single whitespace after maxval
  Image img(w, h);
  for (double& p : img.pixels) {
    const int hi = in.get();
    const int lo = in.get();
    if (hi < 0 || lo < 0) throw std::runtime_error("read_pgm: truncated " + path);
    p = static_cast<double>((hi << 8) | lo) / 65535.0;
  }
  return img;
}

}  // namespace ssod
