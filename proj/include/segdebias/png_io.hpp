#pragma once

#include <filesystem>

#include "segdebias/image.hpp"

namespace segdebias {

/// Reads an 8-bit RGB PNG into an ImageTensor with values k/255.
ImageTensor read_image_png(const std::filesystem::path& path);

/// Writes an ImageTensor (values in [0,1]) as an 8-bit RGB PNG,
/// quantizing each value to round(v * 255).
void write_image_png(const ImageTensor& image, const std::filesystem::path& path);

/// Reads a single-channel 8-bit PNG whose pixels are exactly 0 or 255;
/// 255 maps to mask value 1.
BinaryMask read_mask_png(const std::filesystem::path& path);

/// Writes a BinaryMask as a single-channel PNG with values {0, 255}.
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);

} // namespace segdebias
