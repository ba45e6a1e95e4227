#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nutrisight/image.h"

namespace nutrisight::height {

struct PpmCalibration {
  double ppm = 0.0;  // pixels per centimetre
  std::string device_id;
  std::string setup_note;
  std::string created_at;
};

// Pinhole intrinsics with Brown-Conrady distortion (k1, k2, p1, p2[, k3]).
struct CameraModel {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  std::vector<double> distortion;

  void validate(int width, int height) const;
};

// Maps undistorted normalised coordinates to distorted normalised coordinates.
Eigen::Vector2d distort_normalized(const CameraModel& camera, const Eigen::Vector2d& xy);

// Resamples the image so straight world lines map to straight lines.
// All-zero distortion returns the input unchanged.
RgbImage undistort(const RgbImage& image, const CameraModel& camera);

// Anything with a pixel height: a tight crop image or its mask.
template <typename T>
concept PixelExtent = requires(const T& t) {
  { t.height() } -> std::convertible_to<int>;
};

PpmCalibration calibrate_ppm_from_pixels(int crop_pixel_height, double true_height_cm);
double estimate_height_from_pixels(int crop_pixel_height, const PpmCalibration& calibration);
double estimate_height_from_pixels(int crop_pixel_height,
                                   const std::optional<PpmCalibration>& calibration);

template <PixelExtent Crop>
PpmCalibration calibrate_ppm(const Crop& crop, double true_height_cm) {
  return calibrate_ppm_from_pixels(crop.height(), true_height_cm);
}

template <PixelExtent Crop>
double estimate_height(const Crop& crop, const PpmCalibration& calibration) {
  return estimate_height_from_pixels(crop.height(), calibration);
}

template <PixelExtent Crop>
double estimate_height(const Crop& crop, const std::optional<PpmCalibration>& calibration) {
  return estimate_height_from_pixels(crop.height(), calibration);
}

// Calibration shipped with the fixtures: camera 1 m above ground, subject
// 1.5 m from the lens, 2 px/cm at the fixture render resolution.
PpmCalibration default_calibration();

// device_id -> calibration, persisted as a JSON table. Reads take a shared
// lock; registration is exclusive.
class CalibrationRegistry {
 public:
  CalibrationRegistry() = default;

  static CalibrationRegistry load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void register_calibration(PpmCalibration calibration);
  std::optional<PpmCalibration> find(const std::string& device_id) const;
  // Named device, or the "default" entry when device_id is empty.
  std::optional<PpmCalibration> resolve(const std::string& device_id) const;
  std::vector<std::string> devices() const;

  std::string to_json() const;
  static CalibrationRegistry from_json(const std::string& text);

  CalibrationRegistry(const CalibrationRegistry& other);
  CalibrationRegistry& operator=(const CalibrationRegistry& other);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, PpmCalibration> entries_;
};

}  // namespace nutrisight::height
