#include "nutrisight/synthetic_scene.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"
#include "nutrisight/health.h"
#include "nutrisight/image_io.h"

namespace nutrisight::synth {

namespace {

constexpr Rgb kSkin{168, 116, 86};
constexpr Rgb kShirt{84, 142, 172};
constexpr Rgb kTrousers{112, 132, 152};
constexpr Rgb kEye{50, 145, 210};
constexpr Rgb kMouth{200, 100, 110};

class Canvas {
 public:
  Canvas(RgbImage& image, BinaryMask& mask) : image_(image), mask_(mask) {}

  void ellipse(double cx, double cy, double rx, double ry, Rgb color) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    const int x1 = std::min(image_.width() - 1, static_cast<int>(std::ceil(cx + rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    const int y1 = std::min(image_.height() - 1, static_cast<int>(std::ceil(cy + ry)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double u = (x + 0.5 - cx) / rx;
        const double v = (y + 0.5 - cy) / ry;
        if (u * u + v * v <= 1.0) put(x, y, color);
      }
    }
  }

  // Trapezoid between rows ya and yb with horizontal extents interpolated
  // linearly from [la, ra] to [lb, rb].
  void trapezoid(double ya, double la, double ra, double yb, double lb, double rb, Rgb color) {
    const int y0 = std::max(0, static_cast<int>(std::lround(ya)));
    const int y1 = std::min(image_.height(), static_cast<int>(std::lround(yb)));
    for (int y = y0; y < y1; ++y) {
      const double t = yb > ya ? (y + 0.5 - ya) / (yb - ya) : 0.0;
      const double l = la + t * (lb - la);
      const double r = ra + t * (rb - ra);
      const int x0 = std::max(0, static_cast<int>(std::lround(l)));
      const int x1 = std::min(image_.width(), static_cast<int>(std::lround(r)));
      for (int x = x0; x < x1; ++x) put(x, y, color);
    }
  }

 private:
  void put(int x, int y, Rgb color) {
    image_.set(x, y, color);
    mask_.set(x, y, true);
  }

  RgbImage& image_;
  BinaryMask& mask_;
};

struct FaceFrame {
  double cx, cy, rx, ry;
  PixelCoord at(double u, double v) const { return {cx + u * rx, cy + v * ry}; }
};

std::vector<PixelCoord> face_landmarks(const FaceFrame& f) {
  constexpr double pi = std::numbers::pi;
  std::vector<PixelCoord> pts;
  pts.reserve(68);
  for (int i = 0; i <= 16; ++i) {
    const double a = pi * (1.0 - i / 16.0);
    pts.push_back(f.at(0.9 * std::cos(a), -0.2 + 1.15 * std::sin(a)));
  }
  for (int side = 0; side < 2; ++side) {
    for (int i = 0; i < 5; ++i) {
      const double u = side == 0 ? -0.75 + 0.15 * i : 0.15 + 0.15 * i;
      const double arch = 0.06 * std::sin(pi * i / 4.0);
      pts.push_back(f.at(u, -0.45 - (side == 0 ? arch : 0.06 * std::sin(pi * (4 - i) / 4.0))));
    }
  }
  for (int i = 0; i < 4; ++i) pts.push_back(f.at(0.0, -0.3 + 0.15 * i));
  for (int i = 0; i < 5; ++i) pts.push_back(f.at(-0.2 + 0.1 * i, 0.25 + (i == 2 ? 0.04 : 0.0)));
  // Corners run left to right in image space for both eyes.
  const auto eye = [&](double ecx) {
    const double rx = 0.17, ry = 0.07, ey = -0.25;
    pts.push_back(f.at(ecx - rx, ey));
    pts.push_back(f.at(ecx - rx / 3, ey - ry));
    pts.push_back(f.at(ecx + rx / 3, ey - ry));
    pts.push_back(f.at(ecx + rx, ey));
    pts.push_back(f.at(ecx + rx / 3, ey + ry));
    pts.push_back(f.at(ecx - rx / 3, ey + ry));
  };
  eye(-0.4);
  eye(0.4);
  const double mx = 0.35, my = 0.14, mc = 0.55;
  pts.push_back(f.at(-mx, mc));
  for (int i = 1; i <= 5; ++i) pts.push_back(f.at(-mx + 2 * mx * i / 6.0, mc - my * std::sin(pi * i / 6.0)));
  pts.push_back(f.at(mx, mc));
  for (int i = 1; i <= 5; ++i) pts.push_back(f.at(mx - 2 * mx * i / 6.0, mc + my * std::sin(pi * i / 6.0)));
  const double ix = 0.22, iy = 0.05;
  pts.push_back(f.at(-ix, mc));
  for (int i = 1; i <= 3; ++i) pts.push_back(f.at(-ix + 2 * ix * i / 4.0, mc - iy));
  pts.push_back(f.at(ix, mc));
  for (int i = 1; i <= 3; ++i) pts.push_back(f.at(ix - 2 * ix * i / 4.0, mc + iy));
  return pts;
}

}  // namespace

RenderedSubject render_subject(const SceneSpec& spec) {
  if (!(spec.height_cm > 0.0) || !(spec.weight_kg > 0.0) || !(spec.ppm > 0.0) || !(spec.age_years > 0.0)) {
    fail(ErrorKind::kParameter, "scene height, weight, ppm and age must be positive");
  }
  if (spec.margin_px < 1) fail(ErrorKind::kParameter, "scene margin must be at least 1 px");
  const int body_h = static_cast<int>(std::lround(spec.height_cm * spec.ppm));
  if (body_h < 40) fail(ErrorKind::kParameter, "rendered subject must be at least 40 px tall");

  const double bmi = health::bmi(spec.weight_kg, spec.height_cm);
  const double girth = std::sqrt(bmi / 22.0);
  const double H = body_h;
  const double shoulder_w = 0.25 * H * girth;
  const double hip_w = 0.20 * H * girth;
  const double arm_w = 0.045 * H * girth;
  const double leg_w = 0.075 * H * girth;
  const int width = static_cast<int>(std::ceil(shoulder_w + 2 * arm_w + 0.04 * H)) + 2 * spec.margin_px;
  const int height = body_h + 2 * spec.margin_px;

  RenderedSubject out{RgbImage(width, height), BinaryMask(width, height), {}, {}, body_h};
  Canvas canvas(out.image, out.mask);
  const double cx = width / 2.0;
  const double top = spec.margin_px;
  const auto Y = [&](double frac) { return top + frac * H; };

  const FaceFrame face{cx, Y(0.065), 0.048 * H * std::min(girth, 1.25), 0.065 * H};
  // Legs and trousers.
  const double gap = 0.01 * H;
  canvas.trapezoid(Y(0.50), cx - hip_w / 2, cx + hip_w / 2, Y(0.56), cx - hip_w / 2, cx + hip_w / 2, kTrousers);
  canvas.trapezoid(Y(0.56), cx - gap - leg_w * 1.1, cx - gap, Y(1.0), cx - gap - leg_w * 0.7, cx - gap, kTrousers);
  canvas.trapezoid(Y(0.56), cx + gap, cx + gap + leg_w * 1.1, Y(1.0), cx + gap, cx + gap + leg_w * 0.7, kTrousers);
  // Torso and arms.
  canvas.trapezoid(Y(0.165), cx - shoulder_w / 2, cx + shoulder_w / 2, Y(0.50), cx - hip_w / 2, cx + hip_w / 2,
                   kShirt);
  const double arm_l = cx - shoulder_w / 2 - 0.01 * H;
  const double arm_r = cx + shoulder_w / 2 + 0.01 * H;
  canvas.trapezoid(Y(0.17), arm_l - arm_w, arm_l, Y(0.47), arm_l - arm_w * 0.8, arm_l, kShirt);
  canvas.trapezoid(Y(0.17), arm_r, arm_r + arm_w, Y(0.47), arm_r, arm_r + arm_w * 0.8, kShirt);
  canvas.ellipse(arm_l - arm_w * 0.4, Y(0.49), arm_w * 0.5, 0.025 * H, kSkin);
  canvas.ellipse(arm_r + arm_w * 0.4, Y(0.49), arm_w * 0.5, 0.025 * H, kSkin);
  canvas.trapezoid(Y(0.17), arm_l - arm_w, arm_l + 0.01 * H + 1, Y(0.19), arm_l - arm_w, arm_l + 0.01 * H + 1,
                   kShirt);
  canvas.trapezoid(Y(0.17), arm_r - 0.01 * H - 1, arm_r + arm_w, Y(0.19), arm_r - 0.01 * H - 1, arm_r + arm_w,
                   kShirt);
  // Neck and head.
  canvas.trapezoid(Y(0.12), cx - 0.025 * H, cx + 0.025 * H, Y(0.17), cx - 0.03 * H, cx + 0.03 * H, kSkin);
  canvas.ellipse(face.cx, face.cy, face.rx, face.ry, kSkin);
  const auto lm = face_landmarks(face);
  for (const double u : {-0.4, 0.4}) {
    const auto c = face.at(u, -0.25);
    canvas.ellipse(c.x, c.y, std::max(1.0, 0.17 * face.rx), std::max(1.0, 0.07 * face.ry), kEye);
  }
  const auto mc = face.at(0.0, 0.55);
  canvas.ellipse(mc.x, mc.y, std::max(1.0, 0.3 * face.rx), std::max(1.0, 0.1 * face.ry), kMouth);

  // Whole-pixel extent: the silhouette must span exactly body_h rows.
  for (int y = 0; y < height; ++y) {
    if (y < spec.margin_px || y >= spec.margin_px + body_h) {
      for (int x = 0; x < width; ++x) {
        out.image.set(x, y, Rgb{0, 0, 0});
        out.mask.set(x, y, false);
      }
    }
  }
  const PixelBox box = bounding_box(out.mask);
  if (box.height() != body_h) fail(ErrorKind::kGeometry, "rendered silhouette height mismatch");

  geometry::FaceLandmarks landmarks;
  landmarks.points = lm;
  landmarks.detection_confidence = 0.99;
  geometry::BodyKeypoints kp;
  using BP = geometry::BodyPart;
  const auto set = [&](BP part, double x, double y) {
    kp.points[static_cast<int>(part)] = PixelCoord{x, y};
  };
  set(BP::kNose, face.cx, face.cy + 0.1 * face.ry);
  set(BP::kNeck, cx, Y(0.145));
  set(BP::kRShoulder, cx - shoulder_w / 2, Y(0.17));
  set(BP::kLShoulder, cx + shoulder_w / 2, Y(0.17));
  set(BP::kRElbow, arm_l - arm_w / 2, Y(0.32));
  set(BP::kLElbow, arm_r + arm_w / 2, Y(0.32));
  set(BP::kRWrist, arm_l - arm_w / 2, Y(0.48));
  set(BP::kLWrist, arm_r + arm_w / 2, Y(0.48));
  set(BP::kRHip, cx - hip_w * 0.3, Y(0.52));
  set(BP::kLHip, cx + hip_w * 0.3, Y(0.52));
  set(BP::kRKnee, cx - gap - leg_w / 2, Y(0.74));
  set(BP::kLKnee, cx + gap + leg_w / 2, Y(0.74));
  set(BP::kRAnkle, cx - gap - leg_w / 2, Y(0.96));
  set(BP::kLAnkle, cx + gap + leg_w / 2, Y(0.96));
  const auto le = face.at(-0.4, -0.25);
  const auto re = face.at(0.4, -0.25);
  set(BP::kREye, le.x, le.y);
  set(BP::kLEye, re.x, re.y);
  set(BP::kREar, face.cx - face.rx * 0.98, face.cy);
  set(BP::kLEar, face.cx + face.rx * 0.98, face.cy);
  kp.confidence.fill(0.95);

  out.annotation.face = landmarks;
  out.annotation.body = kp;
  const double bfp = health::bfp(bmi, spec.age_years, spec.gender);
  out.annotation.signal = SubjectSignal{spec.weight_kg, spec.height_cm, bfp / 100.0};

  // Revolve the silhouette half-widths, bottom to top, in metres.
  constexpr int kRings = 32;
  std::vector<double> radii;
  radii.reserve(kRings);
  for (int i = 0; i < kRings; ++i) {
    const int row = box.y1 - 1 - static_cast<int>(std::lround((i + 0.5) * body_h / kRings - 0.5));
    int lo = width, hi = -1;
    for (int x = 0; x < width; ++x) {
      if (out.mask.at(x, row)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    const double half = hi >= lo ? (hi - lo + 1) / 2.0 : 0.5;
    radii.push_back(half / spec.ppm / 100.0);
  }
  out.body_mesh = recon::make_revolved_body(spec.height_cm / 100.0, radii, 0.6, 24);
  out.body_mesh.id = "synthetic-body";
  return out;
}

SceneSpec random_scene(std::uint64_t seed) {
  SplitMix rng(hash_combine(seed, 0x5ce2e));
  SceneSpec s;
  s.gender = rng.uniform() < 0.5 ? fusion::Gender::kMale : fusion::Gender::kFemale;
  s.height_cm = s.gender == fusion::Gender::kMale ? rng.uniform(160.0, 195.0) : rng.uniform(150.0, 182.0);
  const double bmi = rng.uniform(16.0, 34.0);
  s.weight_kg = bmi * (s.height_cm / 100.0) * (s.height_cm / 100.0);
  s.age_years = std::round(rng.uniform(18.0, 70.0));
  return s;
}

void write_subject(const std::filesystem::path& dir, const std::string& stem, const RenderedSubject& subject,
                   bool with_mesh) {
  std::filesystem::create_directories(dir);
  write_png(dir / (stem + ".png"), subject.image);
  const std::string ann = geometry::format_annotation(subject.annotation);
  const auto ann_path = dir / (stem + ".ann");
  std::ofstream(ann_path, std::ios::binary) << ann;
  if (with_mesh) recon::write_obj(dir / (stem + ".obj"), subject.body_mesh);
}

}  // namespace nutrisight::synth
