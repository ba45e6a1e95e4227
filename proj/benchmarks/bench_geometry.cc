#include <benchmark/benchmark.h>

#include "nutrisight/perception.h"

namespace {

void BM_ConfidenceMap(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const nutrisight::PixelCoord p{side * 0.4, side * 0.6};
  const double sigma = 8.0 * side / 368.0;
  for (auto _ : state) {
    auto map = nutrisight::geometry::render_confidence_map(p, side, side, sigma);
    benchmark::DoNotOptimize(map);
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ConfidenceMap)->Arg(46)->Arg(184)->Arg(368);

}  // namespace
