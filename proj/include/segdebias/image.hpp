#pragma once

#include <cstdint>
#include <vector>

#include "segdebias/errors.hpp"

namespace segdebias {

/// H x W x C image with real values in [0,1] at pipeline boundaries.
/// Storage is row-major (y, x, c). Also used as a per-pixel field for
/// perturbations and gradients, where the [0,1] range does not apply.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> data;

  static ImageTensor zeros(int h, int w, int c = 3);
  static ImageTensor filled(int h, int w, double value, int c = 3);

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageTensor& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }
};

bool operator==(const ImageTensor& a, const ImageTensor& b);

/// Clamps every value into [0,1].
void clamp01(ImageTensor& image);

bool all_finite(const ImageTensor& image);

/// H x W mask with values exactly 0 or 1. 1 marks the target region.
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  static BinaryMask zeros(int h, int w);
  static BinaryMask ones(int h, int w);

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  int count_ones() const;
  bool all_zero() const { return count_ones() == 0; }
  bool all_one() const { return count_ones() == height * width; }
  bool same_shape(const BinaryMask& other) const { return height == other.height && width == other.width; }
};

bool operator==(const BinaryMask& a, const BinaryMask& b);

/// G x G patch-level mask derived from a BinaryMask by block reduction.
struct PatchMask {
  int grid = 0;
  std::vector<std::uint8_t> data;

  static PatchMask zeros(int grid);

  std::uint8_t& at(int gy, int gx) { return data[static_cast<std::size_t>(gy) * grid + gx]; }
  std::uint8_t at(int gy, int gx) const { return data[static_cast<std::size_t>(gy) * grid + gx]; }

  int count_ones() const;
};

bool operator==(const PatchMask& a, const PatchMask& b);

/// Unit-norm real vector produced by the image or text encoder.
struct Embedding {
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
};

bool operator==(const Embedding& a, const Embedding& b);

/// G x G non-negative grid derived from CLS-token attention.
/// After mass-normalization the entries sum to 1.
struct AttentionMap {
  int grid = 0;
  std::vector<double> values;

  double& at(int gy, int gx) { return values[static_cast<std::size_t>(gy) * grid + gx]; }
  double at(int gy, int gx) const { return values[static_cast<std::size_t>(gy) * grid + gx]; }
};

} // namespace segdebias
