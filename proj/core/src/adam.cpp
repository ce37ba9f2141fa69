#include "mesc/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mesc::nn {

void Adam::step(const std::vector<NamedParam>& params, const GradSink& grads) {
  static const std::vector<float> kNoGrad;

  // Gather gradient views and validate before mutating anything.
  std::vector<const std::vector<float>*> gs(params.size());
  double sq_sum = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto* g = grads.find(params[i].tensor.get());
    gs[i] = g ? g : &kNoGrad;
    for (float v : *gs[i]) {
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite gradient in parameter '" +
                                 params[i].name + "'");
      sq_sum += static_cast<double>(v) * v;
    }
  }
  float grad_scale = 1.0f;
  if (cfg_.clip_norm > 0.0f) {
    const double norm = std::sqrt(sq_sum);
    if (norm > cfg_.clip_norm) grad_scale = static_cast<float>(cfg_.clip_norm / norm);
  }

  ++step_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    auto& mom = state_[&p];
    if (mom.m.empty()) {
      mom.m.assign(p.numel(), 0.0f);
      mom.v.assign(p.numel(), 0.0f);
    }
    const auto& g = *gs[i];
    for (size_t j = 0; j < p.numel(); ++j) {
      const float gj = j < g.size() ? g[j] * grad_scale : 0.0f;
      mom.m[j] = cfg_.beta1 * mom.m[j] + (1.0f - cfg_.beta1) * gj;
      mom.v[j] = cfg_.beta2 * mom.v[j] + (1.0f - cfg_.beta2) * gj * gj;
      const float mhat = mom.m[j] / bc1;
      const float vhat = mom.v[j] / bc2;
      p.values[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace mesc::nn
