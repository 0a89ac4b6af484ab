#include "rutfinder/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace rutfinder {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void io_error(const fs::path& path, const std::string& what) {
  throw Error(ErrorKind::Io, what + ": " + path.string());
}

[[noreturn]] void format_error(const fs::path& path, const std::string& what) {
  throw Error(ErrorKind::Format, what + ": " + path.string());
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) io_error(path, std::string("cannot open file (") + std::strerror(errno) + ")");
  return f;
}

// ---------------------------------------------------------------- PNG plumbing

struct PngImage {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> bytes;  // tightly packed rows
  std::size_t row_bytes = 0;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

PngImage read_png(const fs::path& path) {
  FilePtr f = open_file(path, "rb");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    format_error(path, "not a PNG file");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  PngImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    format_error(path, "corrupt PNG (" + message + ")");
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = png_get_bit_depth(png, info);
  img.color_type = png_get_color_type(png, info);
  if (img.bit_depth < 8) png_set_packing(png);
  if (img.bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  img.row_bytes = png_get_rowbytes(png, info);
  img.bytes.resize(img.row_bytes * static_cast<std::size_t>(img.height));
  rows.resize(static_cast<std::size_t>(img.height));
  for (int r = 0; r < img.height; ++r) rows[r] = img.bytes.data() + r * img.row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

struct PngWriteSpec {
  int width;
  int height;
  int bit_depth;
  int color_type;
  const std::vector<png_color>* palette = nullptr;
};

void write_png(const fs::path& path, const PngWriteSpec& spec, const std::uint8_t* data, std::size_t row_bytes) {
  FilePtr f = open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(spec.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_error(path, "PNG write failed (" + message + ")");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(spec.width), static_cast<png_uint_32>(spec.height),
               spec.bit_depth, spec.color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (spec.palette) {
    png_set_PLTE(png, info, spec.palette->data(), static_cast<int>(spec.palette->size()));
  }
  png_write_info(png, info);
  if (spec.bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  for (int r = 0; r < spec.height; ++r) rows[r] = data + r * row_bytes;
  png_write_rows(png, const_cast<png_bytepp>(rows.data()), static_cast<png_uint_32>(spec.height));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) io_error(path, "flush failed");
}

// ---------------------------------------------------------------- PFM plumbing

std::string read_token(std::istream& in) {
  std::string tok;
  in >> tok;
  return tok;
}

struct PfmHeader {
  int channels = 1;
  int width = 0;
  int height = 0;
  bool little_endian = true;
};

PfmHeader parse_pfm_header(std::istream& in, const fs::path& path) {
  PfmHeader h;
  const std::string magic = read_token(in);
  if (magic == "Pf") {
    h.channels = 1;
  } else if (magic == "PF") {
    h.channels = 3;
  } else {
    format_error(path, "bad PFM magic");
  }
  double scale = 0.0;
  if (!(in >> h.width >> h.height >> scale) || h.width <= 0 || h.height <= 0 || scale == 0.0) {
    format_error(path, "bad PFM header");
  }
  h.little_endian = scale < 0.0;
  in.get();  // single whitespace before the raster
  return h;
}

float decode_float(const char* p, bool little_endian) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  const bool native_little = std::endian::native == std::endian::little;
  if (little_endian != native_little) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

void write_pfm_raster(const fs::path& path, int width, int height, int channels,
                      const std::vector<float>& top_down) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open file for writing");
  out << (channels == 3 ? "PF" : "Pf") << '\n' << width << ' ' << height << '\n' << "-1.0\n";
  const std::size_t row_len = static_cast<std::size_t>(width) * channels;
  std::vector<char> buf(row_len * 4);
  // PFM stores rows bottom-to-top.
  for (int r = height - 1; r >= 0; --r) {
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(top_down[r * row_len + i]);
      if constexpr (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
      std::memcpy(buf.data() + 4 * i, &bits, 4);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) io_error(path, "PFM write failed");
}

DisparityMap checked_map(Grid<double> values, Mask valid, const fs::path& path) {
  if (values.width() < DisparityMap::kMinSide || values.height() < DisparityMap::kMinSide) {
    format_error(path, "disparity map smaller than 3x3");
  }
  if (count_set(valid) == 0) {
    throw Error(ErrorKind::EmptyMap, "no valid disparity in " + path.string());
  }
  return DisparityMap(std::move(values), std::move(valid));
}

}  // namespace

Grid<float> read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open file");
  const PfmHeader h = parse_pfm_header(in, path);
  if (h.channels != 1) format_error(path, "expected a grayscale (Pf) PFM");
  const std::size_t n = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height);
  std::vector<char> raw(n * 4);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    format_error(path, "PFM raster shorter than header dimensions");
  }
  Grid<float> grid(h.width, h.height);
  for (int r = 0; r < h.height; ++r) {
    const int dst_row = h.height - 1 - r;
    for (int c = 0; c < h.width; ++c) {
      grid(c, dst_row) = decode_float(raw.data() + 4 * (static_cast<std::size_t>(r) * h.width + c), h.little_endian);
    }
  }
  return grid;
}

DisparityMap load_disparity(const fs::path& path, DisparityFormat format, const Png16Options& png) {
  if (format == DisparityFormat::Pfm) {
    const Grid<float> raw = read_pfm(path);
    Grid<double> values(raw.width(), raw.height(), 0.0);
    Mask valid(raw.width(), raw.height(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double d = raw[i];
      const bool ok = std::isfinite(d) && d > 0.0;
      valid[i] = ok;
      values[i] = ok ? d : 0.0;
    }
    return checked_map(std::move(values), std::move(valid), path);
  }

  if (!(png.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "PNG16 scale must be positive");
  const PngImage img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_GRAY || img.bit_depth != 16) {
    format_error(path, "expected a 16-bit grayscale PNG");
  }
  Grid<double> values(img.width, img.height, 0.0);
  Mask valid(img.width, img.height, 0);
  for (int r = 0; r < img.height; ++r) {
    const auto* row = reinterpret_cast<const std::uint16_t*>(img.bytes.data() + r * img.row_bytes);
    for (int c = 0; c < img.width; ++c) {
      const std::uint16_t raw = row[c];
      if (raw == png.invalid_value || raw == 0) continue;
      values(c, r) = raw * png.scale;
      valid(c, r) = 1;
    }
  }
  return checked_map(std::move(values), std::move(valid), path);
}

DisparityMap load_disparity(const fs::path& path, const Png16Options& png) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".pfm") return load_disparity(path, DisparityFormat::Pfm, png);
  if (ext == ".png") return load_disparity(path, DisparityFormat::Png16, png);
  throw Error(ErrorKind::Format, "unknown disparity file extension: " + path.string());
}

void save_pfm(const fs::path& path, const Grid<double>& values, const Mask* valid) {
  if (valid && !valid->same_shape(values)) {
    throw Error(ErrorKind::InvalidArgument, "mask shape differs from value grid");
  }
  std::vector<float> top_down(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    top_down[i] = (valid && !(*valid)[i]) ? std::numeric_limits<float>::quiet_NaN()
                                          : static_cast<float>(values[i]);
  }
  write_pfm_raster(path, values.width(), values.height(), 1, top_down);
}

void save_pfm(const fs::path& path, const DisparityMap& map) {
  save_pfm(path, map.values(), &map.valid_mask());
}

void save_pfm_rgb(const fs::path& path, const Grid<std::array<float, 3>>& values) {
  std::vector<float> top_down;
  top_down.reserve(values.size() * 3);
  for (const auto& px : values.data()) top_down.insert(top_down.end(), px.begin(), px.end());
  write_pfm_raster(path, values.width(), values.height(), 3, top_down);
}

void save_png16(const fs::path& path, const DisparityMap& map, const Png16Options& png) {
  if (!(png.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "PNG16 scale must be positive");
  std::vector<std::uint16_t> raw(map.size(), png.invalid_value);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.valid(i)) continue;
    const double q = std::round(map[i] / png.scale);
    if (q < 1.0 || q > 65535.0 || q == png.invalid_value) {
      throw Error(ErrorKind::InvalidArgument, "disparity not representable in PNG16 fixed point");
    }
    raw[i] = static_cast<std::uint16_t>(q);
  }
  write_png(path, {map.width(), map.height(), 16, PNG_COLOR_TYPE_GRAY},
            reinterpret_cast<const std::uint8_t*>(raw.data()), static_cast<std::size_t>(map.width()) * 2);
}

void save_gray8_png(const fs::path& path, const Grid<std::uint8_t>& image) {
  write_png(path, {image.width(), image.height(), 8, PNG_COLOR_TYPE_GRAY}, image.data().data(),
            static_cast<std::size_t>(image.width()));
}

void save_mask_png(const fs::path& path, const Mask& mask) {
  Grid<std::uint8_t> img(mask.width(), mask.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255 : 0;
  save_gray8_png(path, img);
}

Mask load_mask_png(const fs::path& path) {
  const PngImage img = read_png(path);
  if (img.bit_depth > 8 || (img.color_type != PNG_COLOR_TYPE_GRAY && img.color_type != PNG_COLOR_TYPE_PALETTE)) {
    format_error(path, "expected an 8-bit grayscale mask");
  }
  Mask mask(img.width, img.height, 0);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) mask(c, r) = img.bytes[r * img.row_bytes + c] != 0;
  }
  return mask;
}

void save_label_png(const fs::path& path, const Grid<int>& labels) {
  std::vector<png_color> palette(256);
  palette[0] = {0, 0, 0};
  for (int i = 1; i < 256; ++i) {
    // Golden-angle hue walk keeps neighbouring labels distinguishable.
    const double h = std::fmod(i * 137.508, 360.0) / 60.0;
    const double x = 1.0 - std::fabs(std::fmod(h, 2.0) - 1.0);
    double rgb[3] = {0, 0, 0};
    switch (static_cast<int>(h)) {
      case 0: rgb[0] = 1; rgb[1] = x; break;
      case 1: rgb[0] = x; rgb[1] = 1; break;
      case 2: rgb[1] = 1; rgb[2] = x; break;
      case 3: rgb[1] = x; rgb[2] = 1; break;
      case 4: rgb[0] = x; rgb[2] = 1; break;
      default: rgb[0] = 1; rgb[2] = x; break;
    }
    palette[i] = {static_cast<png_byte>(55 + 200 * rgb[0]), static_cast<png_byte>(55 + 200 * rgb[1]),
                  static_cast<png_byte>(55 + 200 * rgb[2])};
  }
  std::vector<std::uint8_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    idx[i] = static_cast<std::uint8_t>(std::clamp(labels[i], 0, 255));
  }
  PngWriteSpec spec{labels.width(), labels.height(), 8, PNG_COLOR_TYPE_PALETTE, &palette};
  write_png(path, spec, idx.data(), static_cast<std::size_t>(labels.width()));
}

Grid<int> load_label_png(const fs::path& path) {
  const PngImage img = read_png(path);
  if (img.bit_depth != 8 || (img.color_type != PNG_COLOR_TYPE_PALETTE && img.color_type != PNG_COLOR_TYPE_GRAY)) {
    format_error(path, "expected an 8-bit paletted label image");
  }
  Grid<int> labels(img.width, img.height, 0);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) labels(c, r) = img.bytes[r * img.row_bytes + c];
  }
  return labels;
}

}  // namespace rutfinder
