#include "nutrisight/height.h"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "nutrisight/error.h"

namespace nutrisight::height {

void CameraModel::validate(int width, int height) const {
  const double fx = intrinsics(0, 0), fy = intrinsics(1, 1);
  const double cx = intrinsics(0, 2), cy = intrinsics(1, 2);
  if (!intrinsics.allFinite() || !(fx > 0.0) || !(fy > 0.0)) {
    fail(ErrorKind::kParameter, "camera focal lengths must be positive");
  }
  if (!(cx >= 0.0 && cy >= 0.0 && cx <= width - 1 && cy <= height - 1)) {
    fail(ErrorKind::kParameter, "camera principal point outside image");
  }
  if (distortion.size() > 5) fail(ErrorKind::kParameter, "at most 5 distortion coefficients");
  for (double d : distortion) {
    if (!std::isfinite(d)) fail(ErrorKind::kParameter, "non-finite distortion coefficient");
  }
}

Eigen::Vector2d distort_normalized(const CameraModel& camera, const Eigen::Vector2d& xy) {
  const auto coeff = [&](std::size_t i) {
    return i < camera.distortion.size() ? camera.distortion[i] : 0.0;
  };
  const double k1 = coeff(0), k2 = coeff(1), p1 = coeff(2), p2 = coeff(3), k3 = coeff(4);
  const double x = xy.x(), y = xy.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
  return {x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
          y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

RgbImage undistort(const RgbImage& image, const CameraModel& camera) {
  camera.validate(image.width(), image.height());
  const bool identity = std::all_of(camera.distortion.begin(), camera.distortion.end(),
                                    [](double d) { return d == 0.0; });
  if (identity) return image;
  const double fx = camera.intrinsics(0, 0), fy = camera.intrinsics(1, 1);
  const double cx = camera.intrinsics(0, 2), cy = camera.intrinsics(1, 2);
  const double skew = camera.intrinsics(0, 1);
  RgbImage out(image.width(), image.height());
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const double yn = (v - cy) / fy;
      const double xn = (u - cx - skew * yn) / fx;
      const Eigen::Vector2d d = distort_normalized(camera, {xn, yn});
      const double su = fx * d.x() + skew * d.y() + cx;
      const double sv = fy * d.y() + cy;
      const auto px = sample_bilinear(image, su, sv);
      Rgb value;
      for (int c = 0; c < 3; ++c) {
        value[c] = static_cast<std::uint8_t>(std::clamp(std::lround(px[c]), 0L, 255L));
      }
      out.set(u, v, value);
    }
  }
  return out;
}

PpmCalibration calibrate_ppm_from_pixels(int crop_pixel_height, double true_height_cm) {
  if (crop_pixel_height < 1) fail(ErrorKind::kParameter, "crop height must be at least 1 px");
  if (!(true_height_cm > 0.0) || !std::isfinite(true_height_cm)) {
    fail(ErrorKind::kParameter, "true height must be positive");
  }
  PpmCalibration cal;
  cal.ppm = static_cast<double>(crop_pixel_height) / true_height_cm;
  return cal;
}

double estimate_height_from_pixels(int crop_pixel_height, const PpmCalibration& calibration) {
  if (!(calibration.ppm > 0.0) || !std::isfinite(calibration.ppm)) {
    fail(ErrorKind::kConfiguration, "calibration has no valid ppm");
  }
  if (crop_pixel_height < 1) fail(ErrorKind::kParameter, "crop height must be at least 1 px");
  return static_cast<double>(crop_pixel_height) / calibration.ppm;
}

double estimate_height_from_pixels(int crop_pixel_height,
                                   const std::optional<PpmCalibration>& calibration) {
  if (!calibration) fail(ErrorKind::kConfiguration, "no ppm calibration loaded");
  return estimate_height_from_pixels(crop_pixel_height, *calibration);
}

PpmCalibration default_calibration() {
  return {2.0, "default",
          "fixture setup: camera 1 m above ground, subject 1.5 m from lens, parallel to subject",
          "1970-01-01T00:00:00Z"};
}

CalibrationRegistry::CalibrationRegistry(const CalibrationRegistry& other) {
  std::shared_lock lock(other.mutex_);
  entries_ = other.entries_;
}

CalibrationRegistry& CalibrationRegistry::operator=(const CalibrationRegistry& other) {
  if (this == &other) return *this;
  std::map<std::string, PpmCalibration> copy;
  {
    std::shared_lock lock(other.mutex_);
    copy = other.entries_;
  }
  std::unique_lock lock(mutex_);
  entries_ = std::move(copy);
  return *this;
}

void CalibrationRegistry::register_calibration(PpmCalibration calibration) {
  if (!(calibration.ppm > 0.0) || !std::isfinite(calibration.ppm)) {
    fail(ErrorKind::kParameter, "calibration ppm must be positive and finite");
  }
  if (calibration.device_id.empty()) fail(ErrorKind::kParameter, "calibration needs a device_id");
  std::unique_lock lock(mutex_);
  entries_[calibration.device_id] = std::move(calibration);
}

std::optional<PpmCalibration> CalibrationRegistry::find(const std::string& device_id) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(device_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<PpmCalibration> CalibrationRegistry::resolve(const std::string& device_id) const {
  return find(device_id.empty() ? std::string("default") : device_id);
}

std::vector<std::string> CalibrationRegistry::devices() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

std::string CalibrationRegistry::to_json() const {
  nlohmann::json table = nlohmann::json::object();
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, cal] : entries_) {
      table[id] = {{"ppm", cal.ppm}, {"setup_note", cal.setup_note}, {"created_at", cal.created_at}};
    }
  }
  return nlohmann::json{{"version", 1}, {"devices", table}}.dump(2) + "\n";
}

CalibrationRegistry CalibrationRegistry::from_json(const std::string& text) {
  CalibrationRegistry reg;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& [id, entry] : doc.at("devices").items()) {
      PpmCalibration cal;
      cal.device_id = id;
      cal.ppm = entry.at("ppm").get<double>();
      cal.setup_note = entry.value("setup_note", "");
      cal.created_at = entry.value("created_at", "");
      reg.register_calibration(std::move(cal));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("calibration registry: ") + e.what());
  }
  return reg;
}

CalibrationRegistry CalibrationRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfiguration, "cannot open calibration registry " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void CalibrationRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kStorage, "cannot write calibration registry " + path.string());
  out << to_json();
}

}  // namespace nutrisight::height
