#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nutrisight/annotations.h"
#include "nutrisight/embedding.h"
#include "nutrisight/error.h"
#include "nutrisight/fusion.h"
#include "nutrisight/health.h"
#include "nutrisight/height.h"
#include "nutrisight/perception.h"
#include "nutrisight/recon3d.h"

namespace nutrisight {

inline constexpr std::string_view kPipelineVersion = "nutrisight-pipeline/1";

struct PipelineConfig {
  int face_size = 112;
  int crop_margin = 0;
  int point_count = recon::kDefaultSampleCount;
  std::uint64_t sample_seed = 7;
  std::optional<height::CameraModel> camera;  // undistortion off when absent
  std::string face_provider = "synthetic-vggface";
  std::string body_provider = "synthetic-xception";
  std::string cloud_provider = "synthetic-pointnet";
  // Keep intermediate rasters and geometry in the trace.
  bool keep_intermediates = false;
};

struct PipelineComponents {
  std::shared_ptr<const geometry::PerceptionProvider> perception;
  std::shared_ptr<const recon::Reconstructor> reconstructor;
  embed::ProviderRegistry providers;
  height::CalibrationRegistry calibrations;
};

struct ExtractorDigests {
  std::string face, body, cloud;
};

// Everything the pipeline learns about one frame before the regression head.
struct FrameAnalysis {
  double height_cm = 0.0;
  int crop_pixel_height = 0;
  embed::EmbeddingVector face, body, cloud;
  ExtractorDigests digests;

  // Populated when keep_intermediates is set.
  std::optional<BinaryMask> mask;
  std::optional<RgbImage> body_crop;
  std::optional<RgbImage> face_crop;
  std::optional<geometry::FaceLandmarks> landmarks;
  std::optional<geometry::BodyKeypoints> keypoints;
  std::optional<recon::TriangleMesh> mesh;
  std::optional<recon::PointCloud> cloud_points;
};

struct EstimateInputs {
  double age_years = 0.0;
  fusion::Gender gender = fusion::Gender::kMale;
  std::string device_id;
  health::ActivityLevel activity = health::ActivityLevel::kSedentary;
};

struct Estimate {
  double height_cm = 0.0;
  double weight_kg = 0.0;
  health::HealthReport report;
  ExtractorDigests digests;
  std::string model_digest;
};

// preprocess -> height -> face -> body -> reconstruct -> sample -> embed x3
// -> fuse/forward -> metrics. Errors carry the failing stage name.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, PipelineComponents components);

  const PipelineConfig& config() const { return config_; }
  const PipelineComponents& components() const { return components_; }

  // Throws kConfiguration if a named provider is missing.
  void check_providers() const;

  FrameAnalysis analyze(const RgbImage& image, const geometry::FrameContext& ctx,
                        const std::string& device_id) const;

  // Head input from an analysis; `height_override` replaces the predicted
  // height (ground truth during training).
  static fusion::SubjectFeatures to_features(const FrameAnalysis& analysis, fusion::Gender gender,
                                             double age_years,
                                             std::optional<double> height_override = std::nullopt);

  Estimate estimate(const RgbImage& image, const geometry::FrameContext& ctx,
                    const EstimateInputs& inputs, const fusion::FusionModelParams& params) const;

 private:
  PipelineConfig config_;
  PipelineComponents components_;
};

// Runs `fn`, re-throwing nutrisight errors tagged with `stage` and other
// exceptions as provider errors of that stage.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kProvider, e.what(), stage);
  }
}

}  // namespace nutrisight
