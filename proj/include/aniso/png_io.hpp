#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "aniso/error.hpp"
#include "aniso/image.hpp"

namespace aniso::png {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void on_error(png_structp png, png_const_charp msg) {
  auto* where = static_cast<std::string*>(png_get_error_ptr(png));
  throw Error(ErrorKind::Io, "png: " + std::string(msg) + " (" + *where + ")");
}
inline void on_warning(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;
};

// Decodes to 8-bit gray/RGB/RGBA, or 16-bit (big-endian samples) when keep16.
inline Decoded decode(const std::filesystem::path& path, int want_channels, bool keep16) {
  std::string where = path.string();
  FilePtr fp(std::fopen(where.c_str(), "rb"));
  if (!fp) fail(ErrorKind::Io, "cannot open " + where);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorKind::Io, "not a PNG file: " + where);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &where, on_error, on_warning);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16 && !keep16) png_set_strip_16(png);

  bool has_alpha = (color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS);
  bool is_gray = !(color & PNG_COLOR_MASK_COLOR) && color != PNG_COLOR_TYPE_PALETTE;

  if (want_channels >= 3 && is_gray) png_set_gray_to_rgb(png);
  if (want_channels <= 2 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (want_channels == 4 && !has_alpha) png_set_add_alpha(png, keep16 ? 0xffff : 0xff, PNG_FILLER_AFTER);
  if (want_channels != 4 && want_channels != 2 && has_alpha) png_set_strip_alpha(png);

  png_read_update_info(png, info);

  Decoded out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.bytes.resize(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return out;
}

inline void encode(const std::filesystem::path& path, int width, int height, int channels,
                   int bit_depth, const std::uint8_t* bytes, int compression) {
  std::string where = path.string();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr fp(std::fopen(where.c_str(), "wb"));
  if (!fp) fail(ErrorKind::Io, "cannot write " + where);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &where, on_error, on_warning);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, fp.get());
  png_set_compression_level(png, compression);
  int color = channels == 1   ? PNG_COLOR_TYPE_GRAY
              : channels == 2 ? PNG_COLOR_TYPE_GRAY_ALPHA
              : channels == 3 ? PNG_COLOR_TYPE_RGB
                              : PNG_COLOR_TYPE_RGBA;
  png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes + rowbytes * y));
  png_write_end(png, nullptr);
}

}  // namespace detail

/// Reads a PNG converted to the requested channel count (1, 3 or 4) at 8 bits.
inline Image read(const std::filesystem::path& path, int channels) {
  auto d = detail::decode(path, channels, false);
  Image img;
  img.width = d.width;
  img.height = d.height;
  img.channels = d.channels;
  img.data = std::move(d.bytes);
  return img;
}

/// Width and height from the header only.
inline std::pair<int, int> dimensions(const std::filesystem::path& path) {
  std::string where = path.string();
  detail::FilePtr fp(std::fopen(where.c_str(), "rb"));
  if (!fp) fail(ErrorKind::Io, "cannot open " + where);
  std::uint8_t hdr[24];
  if (std::fread(hdr, 1, 24, fp.get()) != 24 || png_sig_cmp(hdr, 0, 8) != 0)
    fail(ErrorKind::Io, "not a PNG file: " + where);
  auto be32 = [&](int off) {
    return (hdr[off] << 24) | (hdr[off + 1] << 16) | (hdr[off + 2] << 8) | hdr[off + 3];
  };
  return {be32(16), be32(20)};
}

inline void write(const std::filesystem::path& path, const Image& img, int compression = 6) {
  detail::encode(path, img.width, img.height, img.channels, 8, img.data.data(), compression);
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask,
                       int compression = 6) {
  std::vector<std::uint8_t> bytes(mask.cells().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.cells()[i] ? 255 : 0;
  detail::encode(path, mask.width(), mask.height(), 1, 8, bytes.data(), compression);
}

/// Any nonzero gray sample reads as set.
inline BinaryMask read_mask(const std::filesystem::path& path) {
  Image g = read(path, 1);
  BinaryMask m(g.width, g.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) m.cells()[i] = g.data[i] ? 1 : 0;
  return m;
}

inline void write_gray16(const std::filesystem::path& path, int width, int height,
                         const std::vector<std::uint16_t>& values, int compression = 6) {
  std::vector<std::uint8_t> bytes(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(values[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(values[i] & 0xff);
  }
  detail::encode(path, width, height, 1, 16, bytes.data(), compression);
}

inline std::vector<std::uint16_t> read_gray16(const std::filesystem::path& path, int* width,
                                              int* height) {
  auto d = detail::decode(path, 1, true);
  if (d.bit_depth != 16) fail(ErrorKind::Io, "expected 16-bit PNG: " + path.string());
  *width = d.width;
  *height = d.height;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint16_t>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1]);
  return out;
}

}  // namespace aniso::png
