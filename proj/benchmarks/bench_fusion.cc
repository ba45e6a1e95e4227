#include <benchmark/benchmark.h>

#include "nutrisight/embedding.h"
#include "nutrisight/fusion.h"

namespace {

using namespace nutrisight;

fusion::SubjectFeatures features() {
  fusion::SubjectFeatures f;
  f.face = {Eigen::VectorXd::LinSpaced(embed::kEmbeddingDim, -1.0, 1.0), embed::Modality::kFace};
  f.body = {Eigen::VectorXd::LinSpaced(embed::kEmbeddingDim, 1.0, -1.0), embed::Modality::kBody};
  f.cloud = {Eigen::VectorXd::Constant(embed::kEmbeddingDim, 0.25), embed::Modality::kCloud};
  f.height_cm = 172.0;
  f.age_years = 30.0;
  return f;
}

void BM_PredictWeight(benchmark::State& state) {
  const auto params = fusion::init_params<float>(fusion::Architecture{}, 3);
  const auto f = features();
  for (auto _ : state) benchmark::DoNotOptimize(fusion::predict_weight(f, params));
}
BENCHMARK(BM_PredictWeight);

void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  fusion::TrainingConfig cfg;
  const auto params = fusion::init_params<float>(cfg.architecture, 3);
  std::vector<fusion::TrainingSample> samples(n);
  for (int i = 0; i < n; ++i) {
    samples[i].features = features();
    samples[i].features.height_cm = 150.0 + i;
    samples[i].target_weight_kg = 60.0 + 0.5 * i;
  }
  const auto batch = fusion::make_batch<float>(samples, cfg.active, cfg.normalize_embeddings);
  fusion::Gradients<float> grads;
  for (auto _ : state) benchmark::DoNotOptimize(fusion::loss_and_gradients(batch, params, &grads));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainStep)->Arg(32);

}  // namespace
