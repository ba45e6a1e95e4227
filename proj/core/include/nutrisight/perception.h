#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nutrisight/image.h"

namespace nutrisight::geometry {

inline constexpr int kFaceLandmarkCount = 68;
inline constexpr int kBodyKeypointCount = 18;

// 68-point face layout indices used for alignment.
inline constexpr int kLeftInnerEye = 39;
inline constexpr int kRightInnerEye = 42;
inline constexpr int kBottomLip = 57;

struct FaceLandmarks {
  std::vector<PixelCoord> points;  // exactly 68
  double detection_confidence = 1.0;
};

// 18-slot body skeleton (nose, neck, shoulders, elbows, wrists, hips, knees,
// ankles, eyes, ears). Missing slots are nullopt.
struct BodyKeypoints {
  std::array<std::optional<PixelCoord>, kBodyKeypointCount> points{};
  std::array<double, kBodyKeypointCount> confidence{};

  int present() const;
};

enum BodyPart : int {
  kNose = 0, kNeck, kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist,
  kRHip, kRKnee, kRAnkle, kLHip, kLKnee, kLAnkle, kREye, kLEye, kREar, kLEar,
};

// Throws kGeometry when the landmark count or positions are invalid for an
// image of the given size.
void validate(const FaceLandmarks& landmarks, int width, int height);
void validate(const BodyKeypoints& keypoints, int width, int height);

struct ConfidenceMap {
  int width = 0;
  int height = 0;
  double sigma = 0.0;
  int keypoint_index = 0;
  std::vector<double> values;  // row-major

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Gaussian peak exp(-|p - keypoint|^2 / sigma^2). Values that would
// underflow to zero are held at the smallest normal double so the map stays
// strictly positive.
ConfidenceMap render_confidence_map(PixelCoord keypoint, int width, int height, double sigma,
                                    int keypoint_index = 0);

// Spread used for an image of the given height: 8 px at 368 px, linear in size.
double default_sigma(int image_height);

class AffineTransform {
 public:
  AffineTransform();  // identity
  explicit AffineTransform(const Eigen::Matrix<double, 2, 3>& m);

  const Eigen::Matrix<double, 2, 3>& matrix() const noexcept { return m_; }
  Eigen::Matrix2d linear() const { return m_.leftCols<2>(); }
  Eigen::Vector2d translation() const { return m_.col(2); }
  double determinant() const { return linear().determinant(); }

  PixelCoord apply(PixelCoord p) const;
  AffineTransform inverse() const;

 private:
  Eigen::Matrix<double, 2, 3> m_;
};

// Exact three-point affine fit mapping src[i] to dst[i].
AffineTransform solve_affine(const std::array<PixelCoord, 3>& src,
                             const std::array<PixelCoord, 3>& dst);

// Canonical inner-eye / bottom-lip positions for an out_size square crop.
std::array<PixelCoord, 3> default_face_template(int out_size);

// Warps the face so the inner eyes and bottom lip land on the template
// coordinates. Bilinear resampling, black outside the source image.
RgbImage align_face(const RgbImage& image, const FaceLandmarks& landmarks,
                    const std::array<PixelCoord, 3>& face_template, int out_size);

// Generic inverse-mapped affine warp into an out_w x out_h image.
// `dst_to_src` maps output pixel coordinates to source coordinates.
RgbImage warp_affine(const RgbImage& image, const AffineTransform& dst_to_src, int out_w,
                     int out_h);

// Crop to the mask's bounding box expanded by margin (clamped), blacking out
// background pixels.
RgbImage tight_crop(const RgbImage& image, const BinaryMask& mask, int margin);

enum class GammaConvention {
  kInverseExponent,  // out = in^(1/gamma): gamma > 1 brightens
  kDirectExponent,   // out = in^gamma: gamma > 1 darkens
};

RgbImage apply_gamma(const RgbImage& image, double gamma,
                     GammaConvention convention = GammaConvention::kInverseExponent);

// Detector contracts. Learned detectors plug in here; tests use the
// annotation-backed fixture provider.
struct SubjectAnnotation;

struct FrameContext {
  // Annotation known to belong to this frame, if the caller has one.
  const SubjectAnnotation* annotation = nullptr;
  // Digest of the original uploaded frame; stages that receive crops use it
  // to find fixture data recorded against the full image.
  std::string source_digest;
};

class PerceptionProvider {
 public:
  virtual ~PerceptionProvider() = default;
  virtual BinaryMask segment(const RgbImage& image, const FrameContext& ctx) const = 0;
  virtual std::optional<FaceLandmarks> detect_face(const RgbImage& image,
                                                   const FrameContext& ctx) const = 0;
  virtual std::optional<BodyKeypoints> detect_body(const RgbImage& image,
                                                   const FrameContext& ctx) const = 0;
  // Sidecar data for the frame when the provider is annotation-backed.
  virtual const SubjectAnnotation* annotation_for(const RgbImage& /*image*/,
                                                  const FrameContext& ctx) const {
    return ctx.annotation;
  }
};

}  // namespace nutrisight::geometry
