#include <benchmark/benchmark.h>

#include <vector>

#include "mesc/rng.hpp"
#include "mesc/structure/hdbscan.hpp"
#include "mesc/structure/pca.hpp"

using namespace mesc;

// Three gaussian blobs in `dim` dimensions.
static std::vector<float> blob_points(size_t n, size_t dim, Rng& rng) {
  std::vector<float> pts(n * dim);
  for (size_t i = 0; i < n; ++i) {
    const double cx = static_cast<double>(i % 3) * 10.0;
    for (size_t j = 0; j < dim; ++j)
      pts[i * dim + j] = static_cast<float>(cx + rng.normal(0.0, 0.5));
  }
  return pts;
}

static void bm_hdbscan_fit(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  const size_t dim = 8;
  Rng rng(23);
  const auto pts = blob_points(n, dim, rng);
  for (auto _ : state) {
    auto model = structure::hdbscan_fit(pts, n, dim, 15, 15);
    benchmark::DoNotOptimize(model.num_clusters);
  }
  state.SetComplexityN(static_cast<int64_t>(n));
}
BENCHMARK(bm_hdbscan_fit)->Arg(128)->Arg(256)->Arg(512)->Arg(1024)->Complexity();

static void bm_pca_fit(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  const size_t dim = 128;
  Rng rng(29);
  std::vector<float> data(n * dim);
  for (auto& v : data) v = static_cast<float>(rng.normal(0.0, 1.0));
  for (auto _ : state) {
    auto model = structure::fit_reduction(data, n, dim, 64);
    benchmark::DoNotOptimize(model.components.data());
  }
}
BENCHMARK(bm_pca_fit)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
