#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "nutrisight/annotations.h"
#include "nutrisight/image.h"
#include "nutrisight/recon3d.h"

namespace nutrisight::embed {

inline constexpr int kEmbeddingDim = 512;

enum class Modality { kFace, kBody, kCloud };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

struct EmbeddingVector {
  Eigen::VectorXd values;  // kEmbeddingDim entries
  Modality modality = Modality::kFace;

  static EmbeddingVector zeros(Modality m) { return {Eigen::VectorXd::Zero(kEmbeddingDim), m}; }
};

// Throws kData when the vector is the wrong length or non-finite.
void validate(const EmbeddingVector& v);

struct ExtractorDescriptor {
  Modality modality = Modality::kFace;
  std::string provider_name;
  std::string version;
  std::string digest;  // stable fingerprint of the provider's parameters
};

struct FaceCrop {
  RgbImage image;
};
struct BodyImage {
  RgbImage image;
};

using Payload = std::variant<FaceCrop, BodyImage, recon::PointCloud>;

struct ExtractionInput {
  Payload payload;
  std::optional<SubjectSignal> signal;  // only synthetic providers read this
};

Modality modality_of(const Payload& payload);

// Content fingerprint that ignores photometric changes: the silhouette
// (non-black pixels) and size for images, quantised coordinates for clouds.
std::uint64_t payload_fingerprint(const Payload& payload);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual const ExtractorDescriptor& descriptor() const = 0;
  // Implementations may assume the payload modality already matches.
  virtual EmbeddingVector embed(const ExtractionInput& input) const = 0;
};

// Checked extraction: modality match (kContract) and output validity (kProvider).
EmbeddingVector extract(const ExtractionInput& input, const EmbeddingProvider& provider);

// Unit-norm noise seeded by (seed, fingerprint) plus a linear signal code in
// coordinates 0..2: weight_kg/25, height_cm/200, adiposity, each times gain.
EmbeddingVector synthetic_embed(std::uint64_t fingerprint, std::uint64_t seed,
                                const SubjectSignal& signal, Modality modality,
                                double gain = 1.0);
EmbeddingVector synthetic_embed(const Payload& payload, std::uint64_t seed,
                                const SubjectSignal& signal, double gain = 1.0);

inline constexpr double kWeightCodeScale = 1.0 / 25.0;
inline constexpr double kHeightCodeScale = 1.0 / 200.0;
inline constexpr double kAdiposityCodeScale = 1.0;

struct SyntheticProviderConfig {
  std::string name;
  std::string version = "1";
  Modality modality = Modality::kFace;
  std::uint64_t seed = 0;
  double signal_gain = 1.0;
  // Lighting knob: image payloads whose mean foreground luma departs from
  // nominal_luma get their signal attenuated and shifted along a fixed
  // direction, proportional to sensitivity * |ln(luma / nominal)|.
  double brightness_sensitivity = 0.0;
  double nominal_luma = 128.0;
};

class SyntheticEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit SyntheticEmbeddingProvider(SyntheticProviderConfig config);
  const ExtractorDescriptor& descriptor() const override { return descriptor_; }
  EmbeddingVector embed(const ExtractionInput& input) const override;
  const SyntheticProviderConfig& config() const { return config_; }

  // Degradation factor applied for this payload (0 when the knob is off).
  double lighting_degradation(const Payload& payload) const;

 private:
  SyntheticProviderConfig config_;
  ExtractorDescriptor descriptor_;
  Eigen::VectorXd shift_direction_;
};

// Named stand-ins for the extractor families compared in the architecture
// sweep. Gains differ so the sweep produces distinguishable rows.
std::vector<SyntheticProviderConfig> builtin_synthetic_configs();

class ProviderRegistry {
 public:
  void add(std::shared_ptr<const EmbeddingProvider> provider);
  // Throws kConfiguration for unknown names.
  std::shared_ptr<const EmbeddingProvider> get(const std::string& name) const;
  bool contains(const std::string& name) const { return providers_.count(name) > 0; }
  std::vector<std::string> names() const;

  // Registry holding every builtin synthetic provider, with the lighting knob
  // set to `brightness_sensitivity` on image modalities.
  static ProviderRegistry with_builtin_synthetics(double brightness_sensitivity = 0.0);

 private:
  std::map<std::string, std::shared_ptr<const EmbeddingProvider>> providers_;
};

// Golden vector file: "# <provider_name> <digest>" header then one value per line.
void write_embedding(const std::filesystem::path& path, const EmbeddingVector& v,
                     const ExtractorDescriptor& descriptor);
EmbeddingVector read_embedding(const std::filesystem::path& path, std::string* digest = nullptr);

}  // namespace nutrisight::embed
