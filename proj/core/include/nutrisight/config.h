#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nutrisight/fusion.h"
#include "nutrisight/pipeline.h"

namespace nutrisight {

// Settings shared by the CLI and the service. Relative paths are resolved
// against the directory of the config file.
struct AppConfig {
  std::string face_provider = "synthetic-vggface";
  std::string body_provider = "synthetic-xception";
  std::string cloud_provider = "synthetic-pointnet";
  std::string perception = "fixture";         // only "fixture"
  std::string reconstructor = "ellipsoid";    // "ellipsoid" or "fixture-mesh"
  std::filesystem::path fixture_dir;
  std::filesystem::path model_path;
  std::filesystem::path calibration_registry_path;
  std::filesystem::path store_path = "nutrisight-store";
  int point_count = 2048;
  std::uint64_t seed = 7;
  double brightness_sensitivity = 0.0;
  std::string gamma_convention = "inverse";   // "inverse" or "direct"

  // Throws kConfiguration on unknown enum values or bad numbers.
  void validate() const;
};

// Unknown keys are rejected (kConfiguration).
AppConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const AppConfig& config);

// "key=value" with the same keys as the JSON file.
void apply_override(AppConfig& config, const std::string& assignment, const std::filesystem::path& base_dir);

geometry::GammaConvention gamma_convention(const AppConfig& config);
PipelineConfig make_pipeline_config(const AppConfig& config);
PipelineComponents make_components(const AppConfig& config);
fusion::FusionModelParams load_model(const AppConfig& config);

}  // namespace nutrisight
