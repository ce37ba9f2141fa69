#include <cmath>
#include <vector>

#include "doctest.h"
#include "mesc/nn/losses.hpp"
#include "mesc/nn/ops.hpp"
#include "mesc/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::nn;
using mesc::test::check_gradients;
using mesc::test::random_tensor;

namespace {

double softplus(double z) { return std::log1p(std::exp(-std::fabs(z))) + std::max(z, 0.0); }

double logsumexp(const float* row, size_t n) {
  double mx = row[0];
  for (size_t j = 1; j < n; ++j) mx = std::max(mx, double(row[j]));
  double s = 0.0;
  for (size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
  return mx + std::log(s);
}

}  // namespace

TEST_CASE("bce_with_logits matches the stable double-precision formula") {
  Rng rng(31);
  const size_t rows = 4, cols = 3;
  auto logits = random_tensor({rows, cols}, rng, false, 2.0);
  std::vector<float> targets(rows * cols);
  for (auto& t : targets) t = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  auto loss = bce_with_logits(logits, targets);

  // BCE(z, y) = softplus(z) - y*z, summed over columns, averaged over rows
  double expect = 0.0;
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) {
      const double z = logits->values[i * cols + j];
      expect += softplus(z) - targets[i * cols + j] * z;
    }
  expect /= rows;
  CHECK(loss->item() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("bce_with_logits is stable at extreme logits") {
  auto logits = Tensor::from({2, 1}, {80.0f, -80.0f});
  auto l1 = bce_with_logits(logits, {1.0f, 0.0f});  // confident and right
  CHECK(l1->item() == doctest::Approx(0.0).epsilon(1e-6));
  auto l2 = bce_with_logits(logits, {0.0f, 1.0f});  // confident and wrong
  CHECK(l2->item() == doctest::Approx(80.0).epsilon(1e-5));
  CHECK(std::isfinite(l2->item()));
}

TEST_CASE("softmax_ce equals mean negative log softmax at the label") {
  Rng rng(32);
  const size_t rows = 5, cols = 4;
  auto logits = random_tensor({rows, cols}, rng, false, 2.0);
  std::vector<int> labels;
  for (size_t i = 0; i < rows; ++i) labels.push_back(rng.uniform_int(0, cols - 1));
  auto loss = softmax_ce(logits, labels);
  double expect = 0.0;
  for (size_t i = 0; i < rows; ++i) {
    const float* row = logits->values.data() + i * cols;
    expect += logsumexp(row, cols) - row[labels[i]];
  }
  expect /= rows;
  CHECK(loss->item() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("soft_ce with one-hot targets reduces to softmax_ce") {
  Rng rng(33);
  const size_t rows = 4, cols = 5;
  auto logits = random_tensor({rows, cols}, rng, false, 1.5);
  std::vector<int> labels;
  std::vector<float> onehot(rows * cols, 0.0f);
  for (size_t i = 0; i < rows; ++i) {
    const int l = rng.uniform_int(0, cols - 1);
    labels.push_back(l);
    onehot[i * cols + l] = 1.0f;
  }
  auto hard = softmax_ce(logits, labels);
  auto soft = soft_ce(logits, onehot);
  CHECK(soft->item() == doctest::Approx(hard->item()).epsilon(1e-5));
}

TEST_CASE("soft_ce matches the logsumexp formula for fractional targets") {
  auto logits = Tensor::from({1, 3}, {0.5f, -1.0f, 2.0f});
  std::vector<float> q = {0.2f, 0.3f, 0.5f};
  auto loss = soft_ce(logits, q);
  const double lse = logsumexp(logits->values.data(), 3);
  const double dot = 0.2 * 0.5 + 0.3 * -1.0 + 0.5 * 2.0;
  CHECK(loss->item() == doctest::Approx(lse - dot).epsilon(1e-5));
}

TEST_CASE("loss gradients pass finite differences") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(300 + seed);
    const size_t rows = 3, cols = 4;
    auto logits = random_tensor({rows, cols}, rng, true, 1.5);

    std::vector<float> targets(rows * cols);
    for (auto& t : targets) t = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    auto r1 = check_gradients(
        {{"z", logits}}, [&] { return bce_with_logits(logits, targets); });
    CHECK_MESSAGE(r1.ok, "bce seed ", seed, ": ", r1.worst_at);

    std::vector<int> labels;
    for (size_t i = 0; i < rows; ++i)
      labels.push_back(rng.uniform_int(0, cols - 1));
    auto r2 = check_gradients(
        {{"z", logits}}, [&] { return softmax_ce(logits, labels); });
    CHECK_MESSAGE(r2.ok, "softmax_ce seed ", seed, ": ", r2.worst_at);

    std::vector<float> q(rows * cols);
    for (size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (size_t j = 0; j < cols; ++j) {
        q[i * cols + j] = float(rng.uniform());
        s += q[i * cols + j];
      }
      for (size_t j = 0; j < cols; ++j) q[i * cols + j] /= float(s);
    }
    auto r3 = check_gradients(
        {{"z", logits}}, [&] { return soft_ce(logits, q); });
    CHECK_MESSAGE(r3.ok, "soft_ce seed ", seed, ": ", r3.worst_at);
  }
}

TEST_CASE("sigmoid and softmax_vector helpers") {
  CHECK(sigmoid(0.0f) == doctest::Approx(0.5));
  CHECK(sigmoid(100.0f) == doctest::Approx(1.0));
  CHECK(sigmoid(-100.0f) == doctest::Approx(0.0));
  auto p = softmax_vector({1.0f, 1.0f, 1.0f});
  for (float v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  auto q = softmax_vector({1000.0f, 0.0f});
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(0.0));
}
