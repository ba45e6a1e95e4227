#include "nutrisight/perception.h"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nutrisight/error.h"

namespace nutrisight::geometry {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double triangle_area(const std::array<PixelCoord, 3>& p) {
  return 0.5 * std::abs((p[1].x - p[0].x) * (p[2].y - p[0].y) -
                        (p[2].x - p[0].x) * (p[1].y - p[0].y));
}

}  // namespace

int BodyKeypoints::present() const {
  return static_cast<int>(std::count_if(points.begin(), points.end(),
                                        [](const auto& p) { return p.has_value(); }));
}

void validate(const FaceLandmarks& landmarks, int width, int height) {
  if (landmarks.points.size() != kFaceLandmarkCount) {
    fail(ErrorKind::kGeometry, "expected 68 face landmarks, got " +
                                   std::to_string(landmarks.points.size()));
  }
  for (const auto& p : landmarks.points) {
    if (!(p.x >= 0 && p.y >= 0 && p.x <= width - 1 && p.y <= height - 1)) {
      fail(ErrorKind::kGeometry, "face landmark outside image bounds");
    }
  }
}

void validate(const BodyKeypoints& keypoints, int width, int height) {
  for (const auto& p : keypoints.points) {
    if (p && !(p->x >= 0 && p->y >= 0 && p->x <= width - 1 && p->y <= height - 1)) {
      fail(ErrorKind::kGeometry, "body keypoint outside image bounds");
    }
  }
  for (double c : keypoints.confidence) {
    if (!(c >= 0.0 && c <= 1.0)) fail(ErrorKind::kGeometry, "keypoint confidence outside [0,1]");
  }
}

ConfidenceMap render_confidence_map(PixelCoord keypoint, int width, int height, double sigma,
                                    int keypoint_index) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::kParameter, "confidence map sigma must be positive");
  }
  if (width < 1 || height < 1) fail(ErrorKind::kParameter, "map dimensions must be positive");
  if (!(keypoint.x >= 0 && keypoint.y >= 0 && keypoint.x <= width - 1 &&
        keypoint.y <= height - 1)) {
    fail(ErrorKind::kGeometry, "keypoint outside map bounds");
  }
  ConfidenceMap map{width, height, sigma, keypoint_index, {}};
  map.values.resize(static_cast<std::size_t>(width) * height);
  const double inv_s2 = 1.0 / (sigma * sigma);
  constexpr double kFloor = std::numeric_limits<double>::min();
  for (int y = 0; y < height; ++y) {
    const double dy = y - keypoint.y;
    for (int x = 0; x < width; ++x) {
      const double dx = x - keypoint.x;
      const double v = std::exp(-(dx * dx + dy * dy) * inv_s2);
      map.values[static_cast<std::size_t>(y) * width + x] = std::max(v, kFloor);
    }
  }
  return map;
}

double default_sigma(int image_height) { return 8.0 * static_cast<double>(image_height) / 368.0; }

AffineTransform::AffineTransform() { m_ << 1, 0, 0, 0, 1, 0; }

AffineTransform::AffineTransform(const Eigen::Matrix<double, 2, 3>& m) : m_(m) {
  if (!m_.allFinite() || std::abs(determinant()) <= 1e-12) {
    fail(ErrorKind::kDegenerate, "affine transform linear part is singular");
  }
}

PixelCoord AffineTransform::apply(PixelCoord p) const {
  return {m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2), m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)};
}

AffineTransform AffineTransform::inverse() const {
  const Eigen::Matrix2d inv = linear().inverse();
  Eigen::Matrix<double, 2, 3> m;
  m.leftCols<2>() = inv;
  m.col(2) = -inv * translation();
  return AffineTransform(m);
}

AffineTransform solve_affine(const std::array<PixelCoord, 3>& src,
                             const std::array<PixelCoord, 3>& dst) {
  if (!(triangle_area(src) > 1e-9)) {
    fail(ErrorKind::kDegenerate, "affine source points are collinear");
  }
  Eigen::Matrix3d a;
  Eigen::Matrix<double, 3, 2> b;
  for (int i = 0; i < 3; ++i) {
    a.row(i) << src[i].x, src[i].y, 1.0;
    b.row(i) << dst[i].x, dst[i].y;
  }
  const Eigen::Matrix<double, 3, 2> sol = a.fullPivLu().solve(b);
  return AffineTransform(sol.transpose());
}

std::array<PixelCoord, 3> default_face_template(int out_size) {
  const double s = out_size;
  return {PixelCoord{0.38 * s, 0.40 * s}, PixelCoord{0.62 * s, 0.40 * s},
          PixelCoord{0.50 * s, 0.78 * s}};
}

RgbImage warp_affine(const RgbImage& image, const AffineTransform& dst_to_src, int out_w,
                     int out_h) {
  RgbImage out(out_w, out_h);
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const PixelCoord s = dst_to_src.apply({static_cast<double>(u), static_cast<double>(v)});
      const auto px = sample_bilinear(image, s.x, s.y);
      out.set(u, v, {to_byte(px[0]), to_byte(px[1]), to_byte(px[2])});
    }
  }
  return out;
}

RgbImage align_face(const RgbImage& image, const FaceLandmarks& landmarks,
                    const std::array<PixelCoord, 3>& face_template, int out_size) {
  if (out_size < 1) fail(ErrorKind::kParameter, "aligned face size must be positive");
  validate(landmarks, image.width(), image.height());
  if (!(triangle_area(face_template) > 1e-9)) {
    fail(ErrorKind::kDegenerate, "face template points are collinear");
  }
  const std::array<PixelCoord, 3> anchors{landmarks.points[kLeftInnerEye],
                                          landmarks.points[kRightInnerEye],
                                          landmarks.points[kBottomLip]};
  if (!(triangle_area(anchors) > 1e-9)) {
    fail(ErrorKind::kGeometry, "face landmarks are degenerate");
  }
  // Solve the output->source map directly so every output pixel is one
  // evaluation of the fitted transform.
  return warp_affine(image, solve_affine(face_template, anchors), out_size, out_size);
}

RgbImage tight_crop(const RgbImage& image, const BinaryMask& mask, int margin) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    fail(ErrorKind::kGeometry, "mask and image dimensions differ");
  }
  if (margin < 0) fail(ErrorKind::kParameter, "crop margin must be non-negative");
  const PixelBox box = bounding_box(mask);
  if (box.empty()) fail(ErrorKind::kNoSubject, "segmentation mask is empty");
  const int x0 = std::max(0, box.x0 - margin);
  const int y0 = std::max(0, box.y0 - margin);
  const int x1 = std::min(image.width() - 1, box.x1 + margin);
  const int y1 = std::min(image.height() - 1, box.y1 + margin);
  RgbImage out(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (mask.at(x, y)) out.set(x - x0, y - y0, image.at(x, y));
    }
  }
  return out;
}

RgbImage apply_gamma(const RgbImage& image, double gamma, GammaConvention convention) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::kParameter, "gamma must be positive");
  }
  const double exponent = convention == GammaConvention::kInverseExponent ? 1.0 / gamma : gamma;
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    lut[v] = to_byte(255.0 * std::pow(v / 255.0, exponent));
  }
  RgbImage out = image;
  for (auto& b : out.bytes()) b = lut[b];
  return out;
}

}  // namespace nutrisight::geometry
