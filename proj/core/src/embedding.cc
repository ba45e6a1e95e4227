#include "nutrisight/embedding.h"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "nutrisight/digest.h"
#include "nutrisight/error.h"

namespace nutrisight::embed {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kFace: return "face";
    case Modality::kBody: return "body";
    case Modality::kCloud: return "cloud";
  }
  return "?";
}

Modality modality_from_string(std::string_view s) {
  if (s == "face") return Modality::kFace;
  if (s == "body") return Modality::kBody;
  if (s == "cloud") return Modality::kCloud;
  fail(ErrorKind::kParameter, fmt::format("unknown modality '{}'", s));
}

void validate(const EmbeddingVector& v) {
  if (v.values.size() != kEmbeddingDim) {
    fail(ErrorKind::kData, fmt::format("embedding has {} values, expected {}", v.values.size(), kEmbeddingDim));
  }
  if (!v.values.allFinite()) fail(ErrorKind::kData, "embedding has non-finite values");
}

Modality modality_of(const Payload& payload) {
  switch (payload.index()) {
    case 0: return Modality::kFace;
    case 1: return Modality::kBody;
    default: return Modality::kCloud;
  }
}

namespace {

std::uint64_t image_fingerprint(const RgbImage& image, std::uint64_t tag) {
  std::uint64_t h = hash_combine(tag, static_cast<std::uint64_t>(image.width()));
  h = hash_combine(h, static_cast<std::uint64_t>(image.height()));
  std::uint64_t word = 0;
  int bits = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const bool on = image.channel(x, y, 0) | image.channel(x, y, 1) | image.channel(x, y, 2);
      word = (word << 1) | (on ? 1u : 0u);
      if (++bits == 64) {
        h = hash_combine(h, word);
        word = 0;
        bits = 0;
      }
    }
  }
  return hash_combine(h, word ^ static_cast<std::uint64_t>(bits));
}

const RgbImage* payload_image(const Payload& payload) {
  if (const auto* f = std::get_if<FaceCrop>(&payload)) return &f->image;
  if (const auto* b = std::get_if<BodyImage>(&payload)) return &b->image;
  return nullptr;
}

}  // namespace

std::uint64_t payload_fingerprint(const Payload& payload) {
  if (const auto* f = std::get_if<FaceCrop>(&payload)) return image_fingerprint(f->image, 1);
  if (const auto* b = std::get_if<BodyImage>(&payload)) return image_fingerprint(b->image, 2);
  const auto& cloud = std::get<recon::PointCloud>(payload);
  std::uint64_t h = hash_combine(3, cloud.points.size());
  for (const auto& p : cloud.points) {
    for (int i = 0; i < 3; ++i) {
      h = hash_combine(h, static_cast<std::uint64_t>(std::llround(p[i] * 1e6)));
    }
  }
  return h;
}

EmbeddingVector extract(const ExtractionInput& input, const EmbeddingProvider& provider) {
  const auto& desc = provider.descriptor();
  const Modality got = modality_of(input.payload);
  if (got != desc.modality) {
    fail(ErrorKind::kContract, fmt::format("{} expects {} input, got {}", desc.provider_name,
                                           to_string(desc.modality), to_string(got)));
  }
  EmbeddingVector out;
  try {
    out = provider.embed(input);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::kProvider, fmt::format("{} failed: {}", desc.provider_name, e.what()));
  }
  if (out.values.size() != kEmbeddingDim || !out.values.allFinite()) {
    fail(ErrorKind::kProvider, desc.provider_name + " returned an invalid embedding");
  }
  out.modality = desc.modality;
  return out;
}

EmbeddingVector synthetic_embed(std::uint64_t fingerprint, std::uint64_t seed,
                                const SubjectSignal& signal, Modality modality, double gain) {
  if (!std::isfinite(signal.weight_kg) || !std::isfinite(signal.height_cm) ||
      !std::isfinite(signal.adiposity) || !std::isfinite(gain)) {
    fail(ErrorKind::kData, "synthetic signal must be finite");
  }
  SplitMix rng(hash_combine(seed, fingerprint));
  Eigen::VectorXd v(kEmbeddingDim);
  for (int i = 0; i < kEmbeddingDim; ++i) v[i] = rng.uniform(-1.0, 1.0);
  v /= v.norm();
  v[0] += gain * kWeightCodeScale * signal.weight_kg;
  v[1] += gain * kHeightCodeScale * signal.height_cm;
  v[2] += gain * kAdiposityCodeScale * signal.adiposity;
  return {std::move(v), modality};
}

EmbeddingVector synthetic_embed(const Payload& payload, std::uint64_t seed,
                                const SubjectSignal& signal, double gain) {
  return synthetic_embed(payload_fingerprint(payload), seed, signal, modality_of(payload), gain);
}

SyntheticEmbeddingProvider::SyntheticEmbeddingProvider(SyntheticProviderConfig config)
    : config_(std::move(config)) {
  if (config_.name.empty()) fail(ErrorKind::kConfiguration, "synthetic provider needs a name");
  if (!(config_.nominal_luma > 0.0)) fail(ErrorKind::kConfiguration, "nominal luma must be positive");
  descriptor_.modality = config_.modality;
  descriptor_.provider_name = config_.name;
  descriptor_.version = config_.version;
  descriptor_.digest = sha256_hex(fmt::format(
      "synthetic|{}|{}|{}|{}|{:.17g}|{:.17g}|{:.17g}", config_.name, config_.version,
      to_string(config_.modality), config_.seed, config_.signal_gain,
      config_.brightness_sensitivity, config_.nominal_luma));
  SplitMix rng(hash_combine(config_.seed, 0x5bd1e995));
  shift_direction_.resize(kEmbeddingDim);
  for (int i = 0; i < kEmbeddingDim; ++i) shift_direction_[i] = rng.normal();
  shift_direction_ /= shift_direction_.norm();
}

double SyntheticEmbeddingProvider::lighting_degradation(const Payload& payload) const {
  if (config_.brightness_sensitivity == 0.0) return 0.0;
  const RgbImage* image = payload_image(payload);
  if (image == nullptr) return 0.0;
  const double l = mean_foreground_luma(*image);
  if (!(l > 0.0)) return 0.0;
  return config_.brightness_sensitivity * std::abs(std::log(l / config_.nominal_luma));
}

EmbeddingVector SyntheticEmbeddingProvider::embed(const ExtractionInput& input) const {
  const SubjectSignal signal = input.signal.value_or(SubjectSignal{});
  const double d = lighting_degradation(input.payload);
  auto out = synthetic_embed(input.payload, config_.seed, signal, config_.signal_gain * std::exp(-d));
  if (d > 0.0) out.values += d * shift_direction_;
  return out;
}

std::vector<SyntheticProviderConfig> builtin_synthetic_configs() {
  return {
      {"synthetic-vggface", "1", Modality::kFace, 101, 1.00, 0.0, 128.0},
      {"synthetic-facenet", "1", Modality::kFace, 102, 0.80, 0.0, 128.0},
      {"synthetic-xception", "1", Modality::kBody, 201, 1.00, 0.0, 128.0},
      {"synthetic-resnet152", "1", Modality::kBody, 202, 0.80, 0.0, 128.0},
      {"synthetic-pointnet", "1", Modality::kCloud, 301, 1.00, 0.0, 128.0},
      {"synthetic-dgcnn", "1", Modality::kCloud, 302, 0.85, 0.0, 128.0},
      {"synthetic-gbnet", "1", Modality::kCloud, 303, 0.70, 0.0, 128.0},
  };
}

void ProviderRegistry::add(std::shared_ptr<const EmbeddingProvider> provider) {
  const auto name = provider->descriptor().provider_name;
  providers_[name] = std::move(provider);
}

std::shared_ptr<const EmbeddingProvider> ProviderRegistry::get(const std::string& name) const {
  const auto it = providers_.find(name);
  if (it == providers_.end()) fail(ErrorKind::kConfiguration, "no embedding provider named '" + name + "'");
  return it->second;
}

std::vector<std::string> ProviderRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : providers_) out.push_back(name);
  return out;
}

ProviderRegistry ProviderRegistry::with_builtin_synthetics(double brightness_sensitivity) {
  ProviderRegistry reg;
  for (auto cfg : builtin_synthetic_configs()) {
    if (cfg.modality != Modality::kCloud) cfg.brightness_sensitivity = brightness_sensitivity;
    reg.add(std::make_shared<SyntheticEmbeddingProvider>(cfg));
  }
  return reg;
}

void write_embedding(const std::filesystem::path& path, const EmbeddingVector& v,
                     const ExtractorDescriptor& descriptor) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kStorage, "cannot write " + path.string());
  out << "# " << descriptor.provider_name << ' ' << descriptor.digest << ' '
      << to_string(v.modality) << '\n';
  for (Eigen::Index i = 0; i < v.values.size(); ++i) out << fmt::format("{:.17g}\n", v.values[i]);
}

EmbeddingVector read_embedding(const std::filesystem::path& path, std::string* digest) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kStorage, "cannot open " + path.string());
  std::string hash, name, dig, modality;
  in >> hash >> name >> dig >> modality;
  if (hash != "#") fail(ErrorKind::kFormat, "embedding file missing header");
  std::vector<double> values;
  double x;
  while (in >> x) values.push_back(x);
  EmbeddingVector v{Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                    modality_from_string(modality)};
  validate(v);
  if (digest != nullptr) *digest = dig;
  return v;
}

}  // namespace nutrisight::embed
