#include "nutrisight/config.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "nutrisight/annotations.h"
#include "nutrisight/error.h"

namespace nutrisight {

namespace {

using nlohmann::json;

std::filesystem::path resolve_path(const std::string& value, const std::filesystem::path& base) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

void set_key(AppConfig& c, const std::string& key, const json& v, const std::filesystem::path& base) {
  const auto str = [&]() {
    if (!v.is_string()) fail(ErrorKind::kConfiguration, fmt::format("config key '{}' must be a string", key));
    return v.get<std::string>();
  };
  const auto number = [&]() {
    if (!v.is_number()) fail(ErrorKind::kConfiguration, fmt::format("config key '{}' must be a number", key));
    return v;
  };
  if (key == "face_provider") c.face_provider = str();
  else if (key == "body_provider") c.body_provider = str();
  else if (key == "cloud_provider") c.cloud_provider = str();
  else if (key == "perception") c.perception = str();
  else if (key == "reconstructor") c.reconstructor = str();
  else if (key == "fixture_dir") c.fixture_dir = resolve_path(str(), base);
  else if (key == "model_path") c.model_path = resolve_path(str(), base);
  else if (key == "calibration_registry_path") c.calibration_registry_path = resolve_path(str(), base);
  else if (key == "store_path") c.store_path = resolve_path(str(), base);
  else if (key == "point_count") c.point_count = number().get<int>();
  else if (key == "seed") c.seed = number().get<std::uint64_t>();
  else if (key == "brightness_sensitivity") c.brightness_sensitivity = number().get<double>();
  else if (key == "gamma_convention") c.gamma_convention = str();
  else fail(ErrorKind::kConfiguration, fmt::format("unknown config key '{}'", key));
}

}  // namespace

void AppConfig::validate() const {
  if (perception != "fixture") fail(ErrorKind::kConfiguration, "perception must be \"fixture\"");
  if (reconstructor != "ellipsoid" && reconstructor != "fixture-mesh") {
    fail(ErrorKind::kConfiguration, "reconstructor must be \"ellipsoid\" or \"fixture-mesh\"");
  }
  if (gamma_convention != "inverse" && gamma_convention != "direct") {
    fail(ErrorKind::kConfiguration, "gamma_convention must be \"inverse\" or \"direct\"");
  }
  if (point_count < 1) fail(ErrorKind::kConfiguration, "point_count must be positive");
  if (!(brightness_sensitivity >= 0.0)) fail(ErrorKind::kConfiguration, "brightness_sensitivity must be >= 0");
}

AppConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    fail(ErrorKind::kConfiguration, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kConfiguration, "config must be a JSON object");
  AppConfig c;
  for (const auto& [key, value] : j.items()) set_key(c, key, value, base_dir);
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfiguration, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const AppConfig& c) {
  nlohmann::ordered_json j;
  j["face_provider"] = c.face_provider;
  j["body_provider"] = c.body_provider;
  j["cloud_provider"] = c.cloud_provider;
  j["perception"] = c.perception;
  j["reconstructor"] = c.reconstructor;
  j["fixture_dir"] = c.fixture_dir.string();
  j["model_path"] = c.model_path.string();
  j["calibration_registry_path"] = c.calibration_registry_path.string();
  j["store_path"] = c.store_path.string();
  j["point_count"] = c.point_count;
  j["seed"] = c.seed;
  j["brightness_sensitivity"] = c.brightness_sensitivity;
  j["gamma_convention"] = c.gamma_convention;
  return j.dump(2);
}

void apply_override(AppConfig& config, const std::string& assignment, const std::filesystem::path& base_dir) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorKind::kValidation, fmt::format("override '{}' is not key=value", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json v = value;
  if (key == "point_count" || key == "seed" || key == "brightness_sensitivity") {
    try {
      v = json::parse(value);
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, fmt::format("override '{}' needs a number", key));
    }
  }
  set_key(config, key, v, base_dir);
  config.validate();
}

geometry::GammaConvention gamma_convention(const AppConfig& config) {
  return config.gamma_convention == "direct" ? geometry::GammaConvention::kDirectExponent
                                             : geometry::GammaConvention::kInverseExponent;
}

PipelineConfig make_pipeline_config(const AppConfig& config) {
  PipelineConfig p;
  p.face_provider = config.face_provider;
  p.body_provider = config.body_provider;
  p.cloud_provider = config.cloud_provider;
  p.point_count = config.point_count;
  p.sample_seed = config.seed;
  return p;
}

PipelineComponents make_components(const AppConfig& config) {
  config.validate();
  PipelineComponents c;
  auto perception = std::make_shared<geometry::FixturePerceptionProvider>();
  if (!config.fixture_dir.empty()) perception->index_directory(config.fixture_dir);
  c.perception = perception;
  if (config.reconstructor == "fixture-mesh") {
    auto r = std::make_shared<recon::FixtureMeshReconstructor>();
    if (!config.fixture_dir.empty()) r->index_directory(config.fixture_dir);
    c.reconstructor = r;
  } else {
    c.reconstructor = std::make_shared<recon::EllipsoidReconstructor>();
  }
  c.providers = embed::ProviderRegistry::with_builtin_synthetics(config.brightness_sensitivity);
  if (!config.calibration_registry_path.empty()) {
    c.calibrations = height::CalibrationRegistry::load(config.calibration_registry_path);
  } else {
    c.calibrations.register_calibration(height::default_calibration());
  }
  return c;
}

fusion::FusionModelParams load_model(const AppConfig& config) {
  if (config.model_path.empty()) fail(ErrorKind::kConfiguration, "config has no model_path");
  return fusion::read_params(config.model_path);
}

}  // namespace nutrisight
