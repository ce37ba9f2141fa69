#include <benchmark/benchmark.h>

#include <vector>

#include "mesc/head/head.hpp"
#include "mesc/nn/encoder.hpp"
#include "mesc/nn/ops.hpp"
#include "mesc/nn/tensor.hpp"
#include "mesc/rng.hpp"

using namespace mesc;

static nn::TensorPtr random_matrix(size_t r, size_t c, Rng& rng, bool grad) {
  auto t = nn::Tensor::make({r, c}, grad);
  for (auto& v : t->values) v = static_cast<float>(rng.normal(0.0, 1.0));
  return t;
}

static void bm_matmul(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(7);
  auto a = random_matrix(n, n, rng, false);
  auto b = random_matrix(n, n, rng, false);
  nn::NoGradGuard guard;
  for (auto _ : state) {
    auto c = nn::matmul(a, b);
    benchmark::DoNotOptimize(c->values.data());
  }
  state.SetComplexityN(static_cast<int64_t>(n));
}
BENCHMARK(bm_matmul)->Arg(32)->Arg(64)->Arg(128)->Complexity();

static void bm_encoder_forward(benchmark::State& state) {
  const size_t rows = static_cast<size_t>(state.range(0));
  const size_t d = 64;
  Rng rng(11);
  nn::EncoderLayerParams layer;
  layer.init(d, 8, 4 * d, rng);
  auto x = random_matrix(rows, d, rng, false);
  nn::NoGradGuard guard;
  for (auto _ : state) {
    auto y = nn::encoder_layer_forward(x, layer, false, std::vector<uint8_t>(rows, 1));
    benchmark::DoNotOptimize(y->values.data());
  }
}
BENCHMARK(bm_encoder_forward)->Arg(8)->Arg(32)->Arg(64);

static void bm_encoder_train_step(benchmark::State& state) {
  const size_t rows = static_cast<size_t>(state.range(0));
  const size_t d = 64;
  Rng rng(13);
  nn::EncoderLayerParams layer;
  layer.init(d, 8, 4 * d, rng);
  for (auto _ : state) {
    auto x = random_matrix(rows, d, rng, false);
    auto y = nn::encoder_layer_forward(x, layer, false, std::vector<uint8_t>(rows, 1));
    auto loss = nn::weighted_sum(nn::mul(y, y),
                                 std::vector<float>(y->numel(), 1.0f / y->numel()));
    nn::GradSink sink;
    nn::backward(loss, &sink);
    benchmark::DoNotOptimize(loss->item());
  }
}
BENCHMARK(bm_encoder_train_step)->Arg(8)->Arg(32);

static void bm_head_forward(benchmark::State& state) {
  const size_t n_chunks = static_cast<size_t>(state.range(0));
  Rng rng(17);
  head::HeadConfig hc;
  hc.p = 2;
  hc.t = 2;
  hc.heads = 8;
  hc.d = 64;
  hc.num_outputs = 4;
  hc.max_chunks = 64;
  head::HeadModel model;
  model.init(hc, rng);
  std::vector<float> combined(n_chunks * hc.d_f());
  for (auto& v : combined) v = static_cast<float>(rng.normal(0.0, 1.0));
  nn::NoGradGuard guard;
  for (auto _ : state) {
    auto out = head::head_forward(model, combined, n_chunks, nullptr);
    benchmark::DoNotOptimize(out.logits->values.data());
  }
}
BENCHMARK(bm_head_forward)->Arg(4)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
