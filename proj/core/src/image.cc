#include "nutrisight/image.h"

#include <algorithm>
#include <cmath>

#include "nutrisight/error.h"

namespace nutrisight {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) fail(ErrorKind::kParameter, "image dimensions must be positive");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Rgb RgbImage::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set(int x, int y, Rgb value) {
  const auto i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[i] = value[0];
  data_[i + 1] = value[1];
  data_[i + 2] = value[2];
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill ? 1 : 0) {
  if (width < 1 || height < 1) fail(ErrorKind::kParameter, "mask dimensions must be positive");
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelBox bounding_box(const BinaryMask& mask) {
  PixelBox box{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.x1 < 0) return PixelBox{};
  return box;
}

double luma(Rgb px) { return (299.0 * px[0] + 587.0 * px[1] + 114.0 * px[2]) / 1000.0; }

double mean_foreground_luma(const RgbImage& image) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb px = image.at(x, y);
      if (px[0] == 0 && px[1] == 0 && px[2] == 0) continue;
      sum += luma(px);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::array<double, 3> sample_bilinear(const RgbImage& image, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int ix = static_cast<int>(fx);
  const int iy = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  std::array<double, 3> out{0.0, 0.0, 0.0};
  const auto accumulate = [&](int px, int py, double w) {
    if (w == 0.0 || px < 0 || py < 0 || px >= image.width() || py >= image.height()) return;
    for (int c = 0; c < 3; ++c) out[c] += w * image.channel(px, py, c);
  };
  accumulate(ix, iy, (1.0 - ax) * (1.0 - ay));
  accumulate(ix + 1, iy, ax * (1.0 - ay));
  accumulate(ix, iy + 1, (1.0 - ax) * ay);
  accumulate(ix + 1, iy + 1, ax * ay);
  return out;
}

}  // namespace nutrisight
