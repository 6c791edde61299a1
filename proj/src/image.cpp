#include "segdebias/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segdebias {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::capability: return "capability";
    case ErrorKind::provider: return "provider";
    case ErrorKind::missing_mask: return "missing_mask";
    case ErrorKind::io: return "io";
    case ErrorKind::generation: return "generation";
    case ErrorKind::stratification: return "stratification";
  }
  return "unknown";
}

ImageTensor ImageTensor::zeros(int h, int w, int c) {
  ImageTensor img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
  return img;
}

ImageTensor ImageTensor::filled(int h, int w, double value, int c) {
  ImageTensor img = zeros(h, w, c);
  std::fill(img.data.begin(), img.data.end(), value);
  return img;
}

bool operator==(const ImageTensor& a, const ImageTensor& b) {
  return a.height == b.height && a.width == b.width && a.channels == b.channels && a.data == b.data;
}

void clamp01(ImageTensor& image) {
  for (double& v : image.data) v = std::clamp(v, 0.0, 1.0);
}

bool all_finite(const ImageTensor& image) {
  return std::all_of(image.data.begin(), image.data.end(), [](double v) { return std::isfinite(v); });
}

BinaryMask BinaryMask::zeros(int h, int w) {
  BinaryMask m;
  m.height = h;
  m.width = w;
  m.data.assign(static_cast<std::size_t>(h) * w, 0);
  return m;
}

BinaryMask BinaryMask::ones(int h, int w) {
  BinaryMask m = zeros(h, w);
  std::fill(m.data.begin(), m.data.end(), std::uint8_t{1});
  return m;
}

int BinaryMask::count_ones() const {
  return static_cast<int>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

bool operator==(const BinaryMask& a, const BinaryMask& b) {
  return a.height == b.height && a.width == b.width && a.data == b.data;
}

PatchMask PatchMask::zeros(int grid) {
  PatchMask m;
  m.grid = grid;
  m.data.assign(static_cast<std::size_t>(grid) * grid, 0);
  return m;
}

int PatchMask::count_ones() const {
  return static_cast<int>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

bool operator==(const PatchMask& a, const PatchMask& b) {
  return a.grid == b.grid && a.data == b.data;
}

bool operator==(const Embedding& a, const Embedding& b) { return a.values == b.values; }

} // namespace segdebias
