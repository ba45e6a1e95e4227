#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nutrisight/mesh.h"
#include "nutrisight/recon3d.h"

namespace {

using nutrisight::recon::TriangleMesh;

const TriangleMesh& body() {
  static const TriangleMesh mesh = nutrisight::recon::make_ellipsoid({0, 0, 0}, {0.3, 0.9, 0.2}, 48, 49);
  return mesh;
}

void BM_SamplePointCloud(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto cloud = nutrisight::recon::sample_point_cloud(body(), n, seed++);
    benchmark::DoNotOptimize(cloud);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SamplePointCloud)->Arg(512)->Arg(2048)->Arg(8192);

void BM_Occupancy(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<nutrisight::recon::OccupancyQuery> queries(256);
  for (auto& q : queries) q.position = {0.4 * u(rng), u(rng), 0.3 * u(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nutrisight::recon::occupancy(body(), queries[i++ % queries.size()]));
  }
}
BENCHMARK(BM_Occupancy);

}  // namespace
