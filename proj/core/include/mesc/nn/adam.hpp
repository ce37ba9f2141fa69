#pragma once

#include <unordered_map>
#include <vector>

#include "mesc/nn/tensor.hpp"

namespace mesc::nn {

struct AdamConfig {
  float lr = 3.5e-6f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float clip_norm = 1.0f;  // global-norm gradient clip; <= 0 disables
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  // One update over all params using gradients from `grads`. Parameters absent
  // from the sink are treated as zero-gradient. Throws on non-finite gradients,
  // naming the offending parameter.
  void step(const std::vector<NamedParam>& params, const GradSink& grads);

  size_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(float lr) { cfg_.lr = lr; }

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  AdamConfig cfg_;
  size_t step_ = 0;
  std::unordered_map<const Tensor*, Moments> state_;
};

}  // namespace mesc::nn
