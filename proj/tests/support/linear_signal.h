#pragma once

// Synthetic datasets with a known linear weight signal.

#include <cstdint>
#include <random>
#include <vector>

#include "nutrisight/fusion.h"

namespace linear_signal {

// weight = 40 + 60 * z_F[0] with z_F[0] ~ U(0, 1). The remaining face
// coordinates and the body and cloud embeddings are small Gaussian noise.
inline std::vector<nutrisight::fusion::TrainingSample> dataset(int n, std::uint64_t seed,
                                                              int dim = nutrisight::embed::kEmbeddingDim) {
  using namespace nutrisight;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<fusion::TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    fusion::TrainingSample s;
    s.features.face = {Eigen::VectorXd(dim), embed::Modality::kFace};
    s.features.body = {Eigen::VectorXd(dim), embed::Modality::kBody};
    s.features.cloud = {Eigen::VectorXd(dim), embed::Modality::kCloud};
    for (int k = 0; k < dim; ++k) {
      s.features.face.values[k] = noise(rng);
      s.features.body.values[k] = noise(rng);
      s.features.cloud.values[k] = noise(rng);
    }
    s.features.face.values[0] = u(rng);
    s.features.gender = i % 2 == 0 ? fusion::Gender::kMale : fusion::Gender::kFemale;
    s.features.height_cm = 150.0 + 40.0 * u(rng);
    s.features.age_years = 30.0;
    s.target_weight_kg = 40.0 + 60.0 * s.features.face.values[0];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace linear_signal
