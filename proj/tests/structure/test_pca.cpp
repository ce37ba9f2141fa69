#include <cmath>
#include <vector>

#include "doctest.h"
#include "mesc/rng.hpp"
#include "mesc/structure/pca.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::structure;

TEST_CASE("pca recovers a planted dominant direction") {
  Rng rng(61);
  const size_t n = 400, dim = 6;
  // points ~ t * u + small isotropic noise, u = normalized (1,2,0,-1,0,1)
  std::vector<double> u = {1, 2, 0, -1, 0, 1};
  double nrm = 0;
  for (double v : u) nrm += v * v;
  nrm = std::sqrt(nrm);
  for (auto& v : u) v /= nrm;
  std::vector<float> data(n * dim);
  for (size_t i = 0; i < n; ++i) {
    const double t = rng.normal(0.0, 5.0);
    for (size_t j = 0; j < dim; ++j)
      data[i * dim + j] = float(t * u[j] + rng.normal(0.0, 0.05) + 3.0);
  }
  auto model = fit_reduction(data, n, dim, 1);
  REQUIRE(model.r == 1);
  REQUIRE(model.components.size() == dim);
  // component is u up to sign; sign convention fixes largest entry positive
  double dot = 0, comp_norm = 0;
  for (size_t j = 0; j < dim; ++j) {
    dot += model.components[j] * u[j];
    comp_norm += double(model.components[j]) * model.components[j];
  }
  CHECK(std::fabs(dot) > 0.999);
  CHECK(comp_norm == doctest::Approx(1.0).epsilon(1e-4));
  for (size_t j = 0; j < dim; ++j) {
    double m = 0;
    for (size_t i = 0; i < n; ++i) m += data[i * dim + j];
    CHECK(model.mean[j] == doctest::Approx(m / n).epsilon(1e-5));
  }
}

TEST_CASE("projection preserves pairwise distances of in-plane data") {
  // exact 2-d data embedded in 5-d via an orthonormal pair: reduction to r=2
  // must preserve all pairwise distances
  Rng rng(62);
  const size_t n = 120, dim = 5;
  const double a[5] = {1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0), 0, 0};
  const double b[5] = {0, 1 / std::sqrt(3.0), 0, 1 / std::sqrt(3.0),
                       -1 / std::sqrt(3.0)};
  std::vector<float> data(n * dim);
  std::vector<std::pair<double, double>> coords(n);
  for (size_t i = 0; i < n; ++i) {
    coords[i] = {rng.normal(0, 2), rng.normal(0, 1)};
    for (size_t j = 0; j < dim; ++j)
      data[i * dim + j] = float(coords[i].first * a[j] + coords[i].second * b[j]);
  }
  auto model = fit_reduction(data, n, dim, 2);
  REQUIRE(model.r == 2);
  auto red = model.reduce_all(data, n);
  REQUIRE(red.size() == n * 2);
  for (size_t s = 0; s < 40; ++s) {
    const size_t i = s, j = n - 1 - s;
    const double dx = coords[i].first - coords[j].first;
    const double dy = coords[i].second - coords[j].second;
    const double want = std::sqrt(dx * dx + dy * dy);
    const double rx = red[i * 2] - red[j * 2];
    const double ry = red[i * 2 + 1] - red[j * 2 + 1];
    CHECK(std::sqrt(rx * rx + ry * ry) == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("reduce_all matches per-point reduce") {
  Rng rng(63);
  const size_t n = 50, dim = 8, r = 3;
  std::vector<float> data(n * dim);
  for (auto& v : data) v = float(rng.normal());
  auto model = fit_reduction(data, n, dim, r);
  auto all = model.reduce_all(data, n);
  for (size_t i = 0; i < n; ++i) {
    auto one = model.reduce(data.data() + i * dim);
    REQUIRE(one.size() == model.r);
    for (size_t k = 0; k < model.r; ++k)
      CHECK(all[i * model.r + k] == one[k]);
  }
}

TEST_CASE("rank-deficient data shrinks r instead of inventing directions") {
  // all points on a single line in 4-d: only one informative component
  std::vector<float> data;
  const size_t n = 30;
  for (size_t i = 0; i < n; ++i) {
    const float t = float(i) * 0.5f - 7.0f;
    data.insert(data.end(), {t, 2 * t, -t, 0.0f});
  }
  auto model = fit_reduction(data, n, 4, 3);
  CHECK(model.r == 1);
  // identical points: rank 0, still returns one component rather than none
  std::vector<float> flat(20 * 4, 1.25f);
  auto degenerate = fit_reduction(flat, 20, 4, 2);
  CHECK(degenerate.r == 1);
  auto red = degenerate.reduce_all(flat, 20);
  for (float v : red) CHECK(v == doctest::Approx(0.0).epsilon(1e-5));
}
