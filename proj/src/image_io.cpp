#include "progdf/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "progdf/error.hpp"

namespace progdf {

namespace {

struct WriteState {
  std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<WriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadState {
  std::span<const std::uint8_t> in;
  std::size_t at = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (st->at + len > st->in.size()) png_error(png, "truncated PNG");
  std::memcpy(data, st->in.data() + st->at, len);
  st->at += len;
}

[[noreturn]] void png_fail(const char* what) { fail(ErrorCode::kFormat, what); }

// Rows are packed by the caller; bit_depth 8 with 3 channels or 1 with 1.
std::vector<std::uint8_t> write_png(int width, int height, int bit_depth, int color_type,
                                    const std::vector<std::vector<std::uint8_t>>& rows) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) png_fail("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    png_fail("png: encode failed");
  }
  WriteState st{&out};
  png_set_write_fn(png, &st, write_cb, flush_cb);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, const_cast<png_bytep>(row.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// Decodes to 8-bit RGB regardless of the source format.
std::vector<std::uint8_t> read_png_rgb8(std::span<const std::uint8_t> bytes, int& width,
                                        int& height) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) png_fail("png: bad signature");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) png_fail("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail("png: decode failed");
  }
  ReadState st{bytes, 0};
  png_set_read_fn(png, &st, read_cb);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  require(img.width >= 1 && img.height >= 1, "encode_png: empty image");
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    row.resize(static_cast<std::size_t>(img.width) * 3);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return write_png(img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto px = read_png_rgb8(bytes, w, h);
  ImageBuffer img(w, h);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = px[i] / 255.0;
  return img;
}

std::vector<std::uint8_t> encode_mask_png(const Mask2D& mask) {
  require(mask.width >= 1 && mask.height >= 1, "encode_mask_png: empty mask");
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(mask.height));
  for (int y = 0; y < mask.height; ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    row.assign(static_cast<std::size_t>((mask.width + 7) / 8), 0);
    for (int x = 0; x < mask.width; ++x) {
      if (mask.test(x, y)) row[static_cast<std::size_t>(x / 8)] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
  }
  return write_png(mask.width, mask.height, 1, PNG_COLOR_TYPE_GRAY, rows);
}

Mask2D decode_mask_png(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto px = read_png_rgb8(bytes, w, h);
  Mask2D m(w, h);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = px[i * 3] >= 128 ? 1 : 0;
  return m;
}

}  // namespace progdf
