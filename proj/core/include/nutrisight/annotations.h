#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "nutrisight/perception.h"

namespace nutrisight {

// Ground-truth body signal carried by fixture annotations. Synthetic
// embedding providers encode it; real extractors ignore it.
struct SubjectSignal {
  double weight_kg = 0.0;
  double height_cm = 0.0;
  double adiposity = 0.0;

  friend bool operator==(const SubjectSignal&, const SubjectSignal&) = default;
};

namespace geometry {

struct SubjectAnnotation {
  std::optional<FaceLandmarks> face;
  std::optional<BodyKeypoints> body;
  std::optional<SubjectSignal> signal;
};

// Sidecar text format:
//
//   # nutrisight-annotation 1
//   [face]
//   <index> <x> <y> <confidence>     (68 lines)
//   [body]
//   <index> <x> <y> <confidence>     (present keypoints only)
//   [subject]
//   weight_kg <kg>
//   height_cm <cm>
//   adiposity <fraction>
SubjectAnnotation parse_annotation(std::string_view text);
std::string format_annotation(const SubjectAnnotation& annotation);
SubjectAnnotation read_annotation(const std::filesystem::path& path);

// Sidecar path for an image: same stem, ".ann" extension.
std::filesystem::path annotation_path_for(const std::filesystem::path& image_path);

// Deterministic detector stand-in. Segmentation marks every non-black pixel;
// landmarks and keypoints come from the frame's annotation, or from sidecars
// registered by image digest.
class FixturePerceptionProvider final : public PerceptionProvider {
 public:
  FixturePerceptionProvider() = default;

  // Registers every <image>.png / <image>.ppm in `dir` that has a sidecar.
  void index_directory(const std::filesystem::path& dir);
  void register_image(const std::filesystem::path& image_path);
  void register_annotation(const std::string& image_digest, SubjectAnnotation annotation);

  const SubjectAnnotation* lookup(const RgbImage& image) const;
  std::size_t size() const { return by_digest_.size(); }

  BinaryMask segment(const RgbImage& image, const FrameContext& ctx) const override;
  std::optional<FaceLandmarks> detect_face(const RgbImage& image,
                                           const FrameContext& ctx) const override;
  std::optional<BodyKeypoints> detect_body(const RgbImage& image,
                                           const FrameContext& ctx) const override;
  const SubjectAnnotation* annotation_for(const RgbImage& image,
                                          const FrameContext& ctx) const override {
    return resolve(image, ctx);
  }

 private:
  const SubjectAnnotation* resolve(const RgbImage& image, const FrameContext& ctx) const;

  std::map<std::string, SubjectAnnotation> by_digest_;
};

}  // namespace geometry
}  // namespace nutrisight
