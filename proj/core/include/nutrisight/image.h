#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace nutrisight {

struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

using Rgb = std::array<std::uint8_t, 3>;

// Row-major 8-bit RGB raster. Pixel centres sit on integer coordinates.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb value);
  std::uint8_t channel(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Inclusive pixel bounding box.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
};

// Bounding box of the true pixels; empty box when the mask has none.
PixelBox bounding_box(const BinaryMask& mask);

// Rec. 601 luma in [0, 255].
double luma(Rgb px);

// Mean luma over pixels where any channel is non-zero; 0 for an all-black image.
double mean_foreground_luma(const RgbImage& image);

// Bilinear sample with black outside the image. Returns channel values as reals.
std::array<double, 3> sample_bilinear(const RgbImage& image, double x, double y);

}  // namespace nutrisight
