#include "scenesynth/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "scenesynth/error.hpp"

namespace scenesynth {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

/// Reads the next header integer, skipping whitespace and '#' comments.
int header_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    }
    c = in.get();
  }
  std::string digits;
  while (c != EOF && std::isdigit(c)) {
    digits.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (digits.empty()) throw IoError("malformed header in " + path.string());
  return std::stoi(digits);
}

void expect_magic(std::istream& in, const char* magic, const std::filesystem::path& path) {
  char m[2] = {};
  in.read(m, 2);
  if (!in || m[0] != magic[0] || m[1] != magic[1])
    throw IoError(path.string() + " is not a " + std::string(magic, 2) + " file");
}

}  // namespace

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray(image.width(), image.height());
  const auto src = image.pixels();
  auto dst = gray.pixels();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = static_cast<float>(0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b);
  return gray;
}

GrayImage resample(const GrayImage& image, double x0, double y0, double src_w, double src_h, int out_w, int out_h) {
  GrayImage out(out_w, out_h);
  const double sx = src_w / out_w;
  const double sy = src_h / out_h;
  const int w = image.width();
  const int h = image.height();
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const int iy = std::min(static_cast<int>(fy), h - 2 < 0 ? 0 : h - 2);
    const double ty = h > 1 ? fy - iy : 0.0;
    const int iy1 = std::min(iy + 1, h - 1);
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const int ix = std::min(static_cast<int>(fx), w - 2 < 0 ? 0 : w - 2);
      const double tx = w > 1 ? fx - ix : 0.0;
      const int ix1 = std::min(ix + 1, w - 1);
      const double top = image(ix, iy) * (1.0 - tx) + image(ix1, iy) * tx;
      const double bottom = image(ix, iy1) * (1.0 - tx) + image(ix1, iy1) * tx;
      out(x, y) = static_cast<float>(top * (1.0 - ty) + bottom * ty);
    }
  }
  return out;
}

GrayImage flip_horizontal(const GrayImage& image) {
  GrayImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) out(image.width() - 1 - x, y) = image(x, y);
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto px = image.pixels();
  static_assert(sizeof(Rgb) == 3);
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size() * 3));
  if (!out) throw IoError("failed writing " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, "P6", path);
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PPM header in " + path.string());
  RgbImage image(w, h);
  auto px = image.pixels();
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size() * 3));
  if (!in) throw IoError("truncated PPM " + path.string());
  return image;
}

void write_pgm16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
  auto out = open_out(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::string bytes;
  bytes.reserve(image.pixels().size() * 2);
  for (const auto v : image.pixels()) {
    bytes.push_back(static_cast<char>(v >> 8));  // PGM stores 16-bit samples big-endian
    bytes.push_back(static_cast<char>(v & 0xff));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image<std::uint16_t> read_pgm16(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, "P5", path);
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (w <= 0 || h <= 0 || maxval != 65535) throw IoError("unsupported PGM header in " + path.string());
  Image<std::uint16_t> image(w, h);
  std::string bytes(image.pixels().size() * 2, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("truncated PGM " + path.string());
  auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[2 * i]) << 8) |
                                       static_cast<unsigned char>(bytes[2 * i + 1]));
  return image;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    auto row = image.row(y);
    png_write_row(png, reinterpret_cast<png_const_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace scenesynth
