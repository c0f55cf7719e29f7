#include "scenefill/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace scenefill {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngImage {
  int width = 0, height = 0, channels = 0;
  std::vector<unsigned char> data;  // row-major, interleaved
};

PngImage read_png8(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  PngImage img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  img.data.resize(static_cast<size_t>(img.width) * img.height * img.channels);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = img.data.data() +
              static_cast<size_t>(y) * img.width * img.channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png8(const std::filesystem::path& path, const PngImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + path.string());
  }
  png_init_io(png, fp.get());
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY
                                      : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(
        img.data.data() + static_cast<size_t>(y) * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Frame read_png(const std::filesystem::path& path) {
  const PngImage img = read_png8(path);
  const int k = img.channels >= 3 ? 3 : 1;
  Frame f = Frame::zeros(img.width, img.height, k);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < k; ++c)
        f.ch[c](y, x) =
            img.data[(static_cast<size_t>(y) * img.width + x) * img.channels +
                     c] /
            255.0;
  return f;
}

void write_png(const std::filesystem::path& path, const Frame& f) {
  PngImage img;
  img.width = f.width;
  img.height = f.height;
  img.channels = f.channels() == 1 ? 1 : 3;
  img.data.resize(static_cast<size_t>(f.width) * f.height * img.channels);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double v = f.ch[std::min(c, f.channels() - 1)](y, x);
        img.data[(static_cast<size_t>(y) * f.width + x) * img.channels + c] =
            static_cast<unsigned char>(
                std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  write_png8(path, img);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const PngImage img = read_png8(path);
  Mask m = Mask::empty(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      bool on = false;
      for (int c = 0; c < img.channels; ++c)
        on = on ||
             img.data[(static_cast<size_t>(y) * img.width + x) * img.channels +
                      c] != 0;
      m.data(y, x) = on;
    }
  return m;
}

void write_mask_png(const std::filesystem::path& path, const Mask& m) {
  PngImage img;
  img.width = m.width;
  img.height = m.height;
  img.channels = 1;
  img.data.resize(static_cast<size_t>(m.width) * m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      img.data[static_cast<size_t>(y) * m.width + x] = m.data(y, x) ? 255 : 0;
  write_png8(path, img);
}

}  // namespace scenefill
