#pragma once

#include <cassert>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace scenesynth {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(Rgb, Rgb) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

/// Dense row-major 2D buffer.
template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    assert(width >= 0 && height >= 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const T& operator()(int x, int y) const { return pixels_[index(x, y)]; }

  std::span<T> row(int y) { return {pixels_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int y) const {
    return {pixels_.data() + index(0, y), static_cast<std::size_t>(width_)};
  }

  std::span<T> pixels() { return pixels_; }
  std::span<const T> pixels() const { return pixels_; }

  void fill(const T& v) { std::fill(pixels_.begin(), pixels_.end(), v); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    assert(contains(x, y));
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

using RgbImage = Image<Rgb>;
using GrayImage = Image<float>;
using Mask = Image<std::uint8_t>;

/// 0.299 R + 0.587 G + 0.114 B, in [0, 255].
GrayImage to_gray(const RgbImage& image);

/// Bilinear resample of the source rectangle [x0, x0 + src_w) x [y0, y0 + src_h)
/// onto an out_w x out_h grid. Samples outside the image clamp to the border.
GrayImage resample(const GrayImage& image, double x0, double y0, double src_w, double src_h, int out_w,
                   int out_h);

GrayImage flip_horizontal(const GrayImage& image);

// Binary PPM (P6) / PGM (P5) files. Errors surface as IoError.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const Image<std::uint16_t>& image);
Image<std::uint16_t> read_pgm16(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace scenesynth
