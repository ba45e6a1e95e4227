#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nutrisight/annotations.h"
#include "nutrisight/fusion.h"
#include "nutrisight/image.h"
#include "nutrisight/mesh.h"

namespace nutrisight::synth {

// Parameters of one rendered subject. Pixel height of the silhouette is
// round(height_cm * ppm).
struct SceneSpec {
  double height_cm = 170.0;
  double weight_kg = 70.0;
  fusion::Gender gender = fusion::Gender::kMale;
  double age_years = 30.0;
  double ppm = 2.0;
  int margin_px = 16;
};

struct RenderedSubject {
  RgbImage image;
  BinaryMask mask;
  geometry::SubjectAnnotation annotation;
  recon::TriangleMesh body_mesh;  // metres, revolved from the silhouette
  int body_pixel_height = 0;
};

// Flat-shaded frontal figure on a black background. Every colour in the
// palette has luma close to 128.
RenderedSubject render_subject(const SceneSpec& spec);

// Plausible random subject; heights 150-195 cm, BMI 16-34.
SceneSpec random_scene(std::uint64_t seed);

// Writes <stem>.png, <stem>.ann and, if requested, <stem>.obj into `dir`.
void write_subject(const std::filesystem::path& dir, const std::string& stem,
                   const RenderedSubject& subject, bool with_mesh = true);

}  // namespace nutrisight::synth
