#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "nutrisight/embedding.h"
#include "nutrisight/error.h"
#include "nutrisight/perception.h"
#include "nutrisight/synthetic_scene.h"
#include "oracles.h"
#include "test_paths.h"

using namespace nutrisight;
using namespace nutrisight::embed;

namespace {

RgbImage gray(int w, int h, std::uint8_t v) { return RgbImage(w, h, Rgb{v, v, v}); }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(SyntheticEmbed, ZeroSignalIsUnitNoise) {
  for (std::uint64_t fp = 0; fp < 20; ++fp) {
    const auto v = synthetic_embed(fp, 11, SubjectSignal{}, Modality::kFace);
    EXPECT_EQ(v.values.size(), kEmbeddingDim);
    EXPECT_NEAR(v.values.norm(), 1.0, 1e-9);
  }
}

TEST(SyntheticEmbed, WeightOnlyMovesCoordinateZero) {
  const auto a = synthetic_embed(5, 11, {70.0, 170.0, 0.2}, Modality::kBody);
  const auto b = synthetic_embed(5, 11, {90.0, 170.0, 0.2}, Modality::kBody);
  for (int i = 1; i < kEmbeddingDim; ++i) EXPECT_EQ(a.values[i], b.values[i]);
  EXPECT_NEAR(b.values[0] - a.values[0], 20.0 * kWeightCodeScale, 1e-12);
}

TEST(SyntheticEmbed, WeightIsLinearlyRecoverable) {
  std::vector<double> x, y;
  for (int i = 0; i < 500; ++i) {
    const auto spec = synth::random_scene(static_cast<std::uint64_t>(i));
    const SubjectSignal s{spec.weight_kg, spec.height_cm, 0.0};
    x.push_back(synthetic_embed(static_cast<std::uint64_t>(i), 101, s, Modality::kFace).values[0]);
    y.push_back(spec.weight_kg);
  }
  EXPECT_GT(oracle::ols_r2(x, y), 0.99);
}

TEST(SyntheticEmbed, NoiseSubspaceIsUncorrelatedWithSignal) {
  const int n = 1000;
  std::vector<double> weight, aggregate;
  std::vector<std::vector<double>> coords(kEmbeddingDim);
  for (int i = 0; i < n; ++i) {
    const auto spec = synth::random_scene(static_cast<std::uint64_t>(i) + 5000);
    const auto v = synthetic_embed(static_cast<std::uint64_t>(i), 7, {spec.weight_kg, spec.height_cm, 0.1},
                                   Modality::kCloud);
    weight.push_back(spec.weight_kg);
    aggregate.push_back(v.values.tail(kEmbeddingDim - 3).sum());
    for (int k = 3; k < kEmbeddingDim; ++k) coords[k].push_back(v.values[k]);
  }
  EXPECT_LT(std::abs(pearson(aggregate, weight)), 0.1);
  // Per coordinate: family-wise bound for 509 tests at alpha 0.01.
  const double bound = 4.13 / std::sqrt(static_cast<double>(n));
  int above_point_one = 0;
  for (int k = 3; k < kEmbeddingDim; ++k) {
    const double r = std::abs(pearson(coords[k], weight));
    EXPECT_LT(r, bound) << k;
    above_point_one += r >= 0.1 ? 1 : 0;
  }
  EXPECT_LE(above_point_one, 5);
}

TEST(SyntheticEmbed, NonFiniteSignalIsDataError) {
  try {
    synthetic_embed(1, 1, {NAN, 170.0, 0.0}, Modality::kFace);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(Extract, DeterministicAndSized) {
  const auto reg = ProviderRegistry::with_builtin_synthetics();
  const ExtractionInput in{FaceCrop{gray(32, 32, 128)}, SubjectSignal{70, 175, 0.2}};
  for (const auto& name : reg.names()) {
    const auto p = reg.get(name);
    ExtractionInput input = in;
    if (p->descriptor().modality == Modality::kBody) input.payload = BodyImage{gray(20, 40, 128)};
    if (p->descriptor().modality == Modality::kCloud) {
      recon::PointCloud c;
      c.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
      input.payload = c;
    }
    const auto a = extract(input, *p);
    const auto b = extract(input, *p);
    EXPECT_EQ(a.values.size(), kEmbeddingDim);
    EXPECT_TRUE(a.values.allFinite());
    EXPECT_EQ(a.values, b.values) << name;
    EXPECT_EQ(a.modality, p->descriptor().modality);
  }
}

TEST(Extract, ModalityMismatchIsContractError) {
  const auto reg = ProviderRegistry::with_builtin_synthetics();
  recon::PointCloud cloud;
  for (int i = 0; i < 256; ++i) cloud.points.emplace_back(i, 0, 0);
  try {
    extract({cloud, std::nullopt}, *reg.get("synthetic-vggface"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kContract);
  }
}

namespace {

class BrokenProvider final : public EmbeddingProvider {
 public:
  const ExtractorDescriptor& descriptor() const override { return d_; }
  EmbeddingVector embed(const ExtractionInput&) const override { return {Eigen::VectorXd::Zero(7), Modality::kFace}; }

 private:
  ExtractorDescriptor d_{Modality::kFace, "broken", "0", "x"};
};

}  // namespace

TEST(Extract, InvalidProviderOutputIsProviderError) {
  try {
    extract({FaceCrop{gray(4, 4, 1)}, std::nullopt}, BrokenProvider{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
  }
}

TEST(Registry, UnknownNameIsConfigurationError) {
  const auto reg = ProviderRegistry::with_builtin_synthetics();
  EXPECT_EQ(reg.names().size(), 7u);
  try {
    reg.get("vggface-real");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
}

TEST(Registry, DigestsAreDistinctAndStable) {
  const auto a = ProviderRegistry::with_builtin_synthetics();
  const auto b = ProviderRegistry::with_builtin_synthetics();
  std::set<std::string> seen;
  for (const auto& name : a.names()) {
    EXPECT_EQ(a.get(name)->descriptor().digest, b.get(name)->descriptor().digest);
    seen.insert(a.get(name)->descriptor().digest);
  }
  EXPECT_EQ(seen.size(), a.names().size());
  EXPECT_NE(ProviderRegistry::with_builtin_synthetics(1.0).get("synthetic-vggface")->descriptor().digest,
            a.get("synthetic-vggface")->descriptor().digest);
}

TEST(Fingerprint, IgnoresPhotometricChanges) {
  RgbImage img(10, 10);
  for (int y = 2; y < 8; ++y) {
    for (int x = 3; x < 7; ++x) img.set(x, y, Rgb{100, 120, 90});
  }
  const auto brighter = geometry::apply_gamma(img, 2.0);
  EXPECT_EQ(payload_fingerprint(FaceCrop{img}), payload_fingerprint(FaceCrop{brighter}));
  EXPECT_NE(payload_fingerprint(FaceCrop{img}), payload_fingerprint(BodyImage{img}));
}

TEST(LightingKnob, NominalExposureIsUntouched) {
  auto cfg = builtin_synthetic_configs()[0];
  cfg.brightness_sensitivity = 1.5;
  const SyntheticEmbeddingProvider with(cfg);
  cfg.brightness_sensitivity = 0.0;
  const SyntheticEmbeddingProvider without(cfg);
  const ExtractionInput in{FaceCrop{gray(16, 16, 128)}, SubjectSignal{80, 180, 0.3}};
  EXPECT_DOUBLE_EQ(with.lighting_degradation(in.payload), 0.0);
  EXPECT_EQ(with.embed(in).values, without.embed(in).values);
}

TEST(LightingKnob, ExposureShiftAttenuatesSignal) {
  auto cfg = builtin_synthetic_configs()[0];
  cfg.brightness_sensitivity = 1.0;
  const SyntheticEmbeddingProvider p(cfg);
  const SubjectSignal s{80, 180, 0.3};
  const auto nominal = p.embed({FaceCrop{gray(16, 16, 128)}, s});
  for (const std::uint8_t level : {32, 64, 200}) {
    const ExtractionInput in{FaceCrop{gray(16, 16, level)}, s};
    const double d = p.lighting_degradation(in.payload);
    EXPECT_NEAR(d, std::abs(std::log(level / 128.0)), 1e-12);
    const auto v = p.embed(in);
    const auto clean = synthetic_embed(in.payload, cfg.seed, s, std::exp(-d));
    EXPECT_NEAR((v.values - clean.values).norm(), d, 1e-9);
    EXPECT_GT((v.values - nominal.values).norm(), 0.0);
  }
}

TEST(Golden, FixtureEmbeddingsMatchDescriptors) {
  const auto reg = ProviderRegistry::with_builtin_synthetics();
  const std::pair<const char*, const char*> files[] = {
      {"golden_embedding_face.txt", "synthetic-vggface"},
      {"golden_embedding_body.txt", "synthetic-xception"},
      {"golden_embedding_cloud.txt", "synthetic-pointnet"},
  };
  for (const auto& [file, provider] : files) {
    std::string digest;
    const auto v = read_embedding(testpaths::data_dir() / file, &digest);
    EXPECT_EQ(digest, reg.get(provider)->descriptor().digest) << file;
    EXPECT_EQ(v.values.size(), kEmbeddingDim);
  }
}

TEST(Golden, WriteReadRoundTrip) {
  const auto dir = testpaths::scratch("embedding_io");
  const auto v = synthetic_embed(9, 9, {60, 160, 0.1}, Modality::kBody);
  ExtractorDescriptor d{Modality::kBody, "x", "1", "abc"};
  write_embedding(dir / "v.txt", v, d);
  std::string digest;
  const auto back = read_embedding(dir / "v.txt", &digest);
  EXPECT_EQ(back.values, v.values);
  EXPECT_EQ(back.modality, Modality::kBody);
  EXPECT_EQ(digest, "abc");
}
