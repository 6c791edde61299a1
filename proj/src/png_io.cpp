#include "segdebias/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <csetjmp>
#include <memory>
#include <vector>

#include <png.h>

namespace segdebias {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode, ErrorKind kind) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) raise(kind, "cannot open file: " + path.string());
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;

  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;
};

// Decodes any 8/16-bit PNG into packed 8-bit rows with `want_channels`
// channels (1 = gray, 3 = RGB), using libpng transforms.
std::vector<std::uint8_t> read_rows(const std::filesystem::path& path, int want_channels, int& height,
                                    int& width) {
  FilePtr file = open_file(path, "rb", ErrorKind::io);
  PngReader r;
  if (!r.png || !r.info) raise(ErrorKind::io, "libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) raise(ErrorKind::io, "failed to decode PNG: " + path.string());

  png_init_io(r.png, file.get());
  png_read_info(r.png, r.info);

  png_uint_32 w = png_get_image_width(r.png, r.info);
  png_uint_32 h = png_get_image_height(r.png, r.info);
  png_byte color = png_get_color_type(r.png, r.info);
  png_byte depth = png_get_bit_depth(r.png, r.info);

  if (depth == 16) png_set_strip_16(r.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  png_set_strip_alpha(r.png);
  if (want_channels == 3) {
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(r.png);
  } else {
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
    }
  }
  png_read_update_info(r.png, r.info);

  const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);
  if (row_bytes != static_cast<std::size_t>(w) * want_channels) {
    raise(ErrorKind::io, "unexpected PNG layout in " + path.string());
  }

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * row_bytes);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * row_bytes;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  height = static_cast<int>(h);
  width = static_cast<int>(w);
  return pixels;
}

void write_rows(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels, int height,
                int width, int channels) {
  FilePtr file = open_file(path, "wb", ErrorKind::io);
  PngWriter w;
  if (!w.png || !w.info) raise(ErrorKind::io, "libpng init failed");
  if (setjmp(png_jmpbuf(w.png))) raise(ErrorKind::io, "failed to encode PNG: " + path.string());

  png_init_io(w.png, file.get());
  // Fixed settings so identical inputs produce byte-identical files.
  png_set_compression_level(w.png, 6);
  png_set_filter(w.png, 0, PNG_FILTER_NONE);
  png_set_IHDR(w.png, w.info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);

  std::vector<png_bytep> rows(height);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * row_bytes);
  }
  png_write_image(w.png, rows.data());
  png_write_end(w.png, nullptr);
}

} // namespace

ImageTensor read_image_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  std::vector<std::uint8_t> pixels = read_rows(path, 3, h, w);
  ImageTensor img = ImageTensor::zeros(h, w, 3);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

void write_image_png(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels != 3) raise(ErrorKind::input, "write_image_png expects 3 channels");
  std::vector<std::uint8_t> pixels(image.data.size());
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double v = image.data[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      raise(ErrorKind::input, "image value outside [0,1] at write time: " + path.string());
    }
    pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_rows(path, pixels, image.height, image.width, 3);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  std::vector<std::uint8_t> pixels = read_rows(path, 1, h, w);
  BinaryMask mask = BinaryMask::zeros(h, w);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] == 255) {
      mask.data[i] = 1;
    } else if (pixels[i] == 0) {
      mask.data[i] = 0;
    } else {
      raise(ErrorKind::input,
            "mask PNG is not binary (expected values {0,255}): " + path.string());
    }
  }
  return mask;
}

void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(mask.data.size());
  for (std::size_t i = 0; i < mask.data.size(); ++i) pixels[i] = mask.data[i] ? 255 : 0;
  write_rows(path, pixels, mask.height, mask.width, 1);
}

} // namespace segdebias
