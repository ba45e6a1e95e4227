#include "nutrisight/pipeline.h"

#include <fmt/format.h>

#include "nutrisight/error.h"
#include "nutrisight/image_io.h"

namespace nutrisight {

Pipeline::Pipeline(PipelineConfig config, PipelineComponents components)
    : config_(std::move(config)), components_(std::move(components)) {
  if (!components_.perception) fail(ErrorKind::kConfiguration, "pipeline has no perception provider");
  if (!components_.reconstructor) fail(ErrorKind::kConfiguration, "pipeline has no reconstructor");
  if (config_.face_size < 8) fail(ErrorKind::kConfiguration, "face_size must be at least 8");
  if (config_.point_count < 1) fail(ErrorKind::kConfiguration, "point_count must be at least 1");
}

void Pipeline::check_providers() const {
  const auto expect = [&](const std::string& name, embed::Modality m) {
    const auto p = components_.providers.get(name);
    if (p->descriptor().modality != m) {
      fail(ErrorKind::kConfiguration, fmt::format("provider '{}' is a {} extractor, expected {}", name,
                                                  embed::to_string(p->descriptor().modality), embed::to_string(m)));
    }
  };
  expect(config_.face_provider, embed::Modality::kFace);
  expect(config_.body_provider, embed::Modality::kBody);
  expect(config_.cloud_provider, embed::Modality::kCloud);
}

FrameAnalysis Pipeline::analyze(const RgbImage& input, const geometry::FrameContext& in_ctx,
                                const std::string& device_id) const {
  FrameAnalysis out;
  const bool keep = config_.keep_intermediates;
  geometry::FrameContext ctx = in_ctx;
  if (ctx.source_digest.empty()) ctx.source_digest = image_digest(input);

  const RgbImage image = config_.camera
                             ? run_stage("undistort", [&] { return height::undistort(input, *config_.camera); })
                             : input;

  const auto* annotation = components_.perception->annotation_for(image, ctx);
  std::optional<SubjectSignal> signal;
  if (annotation != nullptr) signal = annotation->signal;

  // Preprocess: segmentation + tight crop.
  const BinaryMask mask = run_stage("preprocess", [&] { return components_.perception->segment(image, ctx); });
  const RgbImage body_crop = run_stage("preprocess", [&] {
    if (mask.width() != image.width() || mask.height() != image.height()) {
      fail(ErrorKind::kProvider, "segmentation mask has the wrong size");
    }
    return geometry::tight_crop(image, mask, config_.crop_margin);
  });
  const PixelBox box = bounding_box(mask);
  out.crop_pixel_height = box.height();

  out.height_cm = run_stage("height", [&] {
    return height::estimate_height_from_pixels(out.crop_pixel_height,
                                               components_.calibrations.resolve(device_id));
  });

  const RgbImage face_crop = run_stage("face", [&] {
    const auto landmarks = components_.perception->detect_face(image, ctx);
    if (!landmarks) fail(ErrorKind::kNoSubject, "no face detected");
    if (keep) out.landmarks = landmarks;
    return geometry::align_face(image, *landmarks, geometry::default_face_template(config_.face_size),
                                config_.face_size);
  });

  run_stage("body", [&] {
    const auto keypoints = components_.perception->detect_body(image, ctx);
    if (!keypoints || keypoints->present() == 0) fail(ErrorKind::kNoSubject, "no body keypoints detected");
    geometry::validate(*keypoints, image.width(), image.height());
    if (keep) out.keypoints = keypoints;
  });

  const recon::TriangleMesh mesh =
      run_stage("reconstruct", [&] { return recon::reconstruct_checked(*components_.reconstructor, body_crop, ctx); });
  const recon::PointCloud cloud = run_stage("sample", [&] {
    return recon::normalize_point_cloud(recon::sample_point_cloud(mesh, config_.point_count, config_.sample_seed));
  });

  const auto extract = [&](const std::string& stage, const std::string& provider, embed::Payload payload,
                           std::string& digest) {
    return run_stage(stage, [&] {
      const auto p = components_.providers.get(provider);
      digest = p->descriptor().digest;
      return embed::extract({std::move(payload), signal}, *p);
    });
  };
  out.face = extract("embed_face", config_.face_provider, embed::FaceCrop{face_crop}, out.digests.face);
  out.body = extract("embed_body", config_.body_provider, embed::BodyImage{body_crop}, out.digests.body);
  out.cloud = extract("embed_cloud", config_.cloud_provider, cloud, out.digests.cloud);

  if (keep) {
    out.mask = mask;
    out.body_crop = body_crop;
    out.face_crop = face_crop;
    out.mesh = mesh;
    out.cloud_points = cloud;
  }
  return out;
}

fusion::SubjectFeatures Pipeline::to_features(const FrameAnalysis& analysis, fusion::Gender gender,
                                              double age_years, std::optional<double> height_override) {
  fusion::SubjectFeatures f;
  f.face = analysis.face;
  f.body = analysis.body;
  f.cloud = analysis.cloud;
  f.gender = gender;
  f.age_years = age_years;
  f.height_cm = height_override.value_or(analysis.height_cm);
  return f;
}

Estimate Pipeline::estimate(const RgbImage& image, const geometry::FrameContext& ctx,
                            const EstimateInputs& inputs, const fusion::FusionModelParams& params) const {
  if (!(inputs.age_years > 0.0)) throw Error(ErrorKind::kValidation, "age must be positive", "request");
  const FrameAnalysis analysis = analyze(image, ctx, inputs.device_id);
  Estimate est;
  est.height_cm = analysis.height_cm;
  est.digests = analysis.digests;
  est.weight_kg = run_stage("fusion", [&] {
    const double w = fusion::predict_weight(to_features(analysis, inputs.gender, inputs.age_years), params);
    if (!(w > 0.0)) fail(ErrorKind::kNumeric, fmt::format("predicted weight {:.3f} kg is not positive", w));
    return w;
  });
  est.report = run_stage("metrics", [&] {
    auto r = health::make_report(est.weight_kg, est.height_cm, inputs.age_years, inputs.gender, inputs.activity);
    r.validate();
    return r;
  });
  est.model_digest = fusion::params_digest(params);
  return est;
}

}  // namespace nutrisight
