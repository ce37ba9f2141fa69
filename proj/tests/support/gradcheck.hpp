#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mesc/nn/tensor.hpp"

namespace mesc::test {

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst_at;
};

// Central finite-difference check of d(loss)/d(param) for every entry of every
// parameter. loss_fn must rebuild the graph from the current parameter values
// on each call. The error is |fd - analytic| / max(|fd|, |analytic|, floor);
// the floor turns the ratio into an absolute bound near zero.
inline GradCheckResult check_gradients(
    const std::vector<nn::NamedParam>& params,
    const std::function<nn::TensorPtr()>& loss_fn, double tol = 1e-3,
    double step = 1e-3, double floor = 0.5) {
  GradCheckResult res;
  nn::GradSink sink;
  {
    auto loss = loss_fn();
    nn::backward(loss, &sink);
  }
  for (const auto& p : params) {
    const auto* grad = sink.find(p.tensor.get());
    for (size_t i = 0; i < p.tensor->numel(); ++i) {
      float& v = p.tensor->values[i];
      const float saved = v;
      double up, down;
      {
        nn::NoGradGuard guard;
        v = static_cast<float>(saved + step);
        up = loss_fn()->item();
        v = static_cast<float>(saved - step);
        down = loss_fn()->item();
      }
      v = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = grad != nullptr && i < grad->size() ? (*grad)[i] : 0.0;
      const double scale = std::max({std::fabs(fd), std::fabs(an), floor});
      const double rel = std::fabs(fd - an) / scale;
      if (rel > res.worst_rel) {
        res.worst_rel = rel;
        res.worst_at = p.name + "[" + std::to_string(i) + "] fd=" +
                       std::to_string(fd) + " an=" + std::to_string(an);
      }
      if (rel >= tol) res.ok = false;
    }
  }
  return res;
}

}  // namespace mesc::test
