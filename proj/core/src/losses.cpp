#include "mesc/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mesc::nn {

namespace {

void check_logits(const TensorPtr& logits, const char* who) {
  if (logits->rank() != 2)
    throw std::invalid_argument(std::string(who) + " expects [rows, cols] logits, got " +
                                shape_str(logits->shape));
  for (float v : logits->values)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string(who) + ": non-finite logit");
}

TensorPtr make_loss_node(const TensorPtr& logits, float value,
                         std::vector<float> dlogits) {
  auto out = Tensor::make({1});
  out->values[0] = value;
  if (grad_enabled()) {
    out->parents.push_back(logits);
    out->requires_grad = logits->requires_grad;
  }
  if (out->requires_grad) {
    TensorPtr lp = logits;
    Tensor* o = out.get();
    auto grad = std::make_shared<std::vector<float>>(std::move(dlogits));
    out->backward_fn = [lp, o, grad]() {
      std::vector<float> dx(grad->size());
      for (size_t i = 0; i < dx.size(); ++i) dx[i] = (*grad)[i] * o->grad[0];
      accumulate_grad(*lp, dx.data(), dx.size());
    };
  }
  return out;
}

}  // namespace

float sigmoid(float z) {
  if (z >= 0.0f) return 1.0f / (1.0f + std::exp(-z));
  const float e = std::exp(z);
  return e / (1.0f + e);
}

std::vector<float> softmax_vector(const std::vector<float>& z) {
  std::vector<float> p(z.size());
  const float mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (float& v : p) v = static_cast<float>(v / sum);
  return p;
}

TensorPtr bce_with_logits(const TensorPtr& logits, std::vector<float> targets) {
  check_logits(logits, "bce_with_logits");
  const size_t rows = logits->shape[0], cols = logits->shape[1];
  if (targets.size() != rows * cols)
    throw std::invalid_argument("bce_with_logits: target size mismatch");
  for (float y : targets)
    if (y != 0.0f && y != 1.0f)
      throw std::invalid_argument("bce_with_logits: targets must be 0 or 1");

  const float inv_rows = 1.0f / static_cast<float>(rows);
  double total = 0.0;
  std::vector<float> dl(rows * cols);
  for (size_t i = 0; i < rows * cols; ++i) {
    const float z = logits->values[i], y = targets[i];
    // max(z,0) - z*y + log(1 + exp(-|z|)): stable for either sign of z
    total += std::max(z, 0.0f) - z * y + std::log1p(std::exp(-std::abs(z)));
    dl[i] = (sigmoid(z) - y) * inv_rows;
  }
  return make_loss_node(logits, static_cast<float>(total / rows), std::move(dl));
}

TensorPtr softmax_ce(const TensorPtr& logits, std::vector<int> labels) {
  check_logits(logits, "softmax_ce");
  const size_t rows = logits->shape[0], cols = logits->shape[1];
  if (labels.size() != rows)
    throw std::invalid_argument("softmax_ce: one label per row required");
  for (int k : labels)
    if (k < 0 || static_cast<size_t>(k) >= cols)
      throw std::invalid_argument("softmax_ce: label " + std::to_string(k) +
                                  " out of range [0," + std::to_string(cols) + ")");

  const float inv_rows = 1.0f / static_cast<float>(rows);
  double total = 0.0;
  std::vector<float> dl(rows * cols);
  for (size_t i = 0; i < rows; ++i) {
    const float* z = logits->values.data() + i * cols;
    float mx = z[0];
    for (size_t j = 1; j < cols; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (size_t j = 0; j < cols; ++j) sum += std::exp(static_cast<double>(z[j]) - mx);
    const double lse = mx + std::log(sum);
    total += lse - z[labels[i]];
    for (size_t j = 0; j < cols; ++j) {
      const float p = static_cast<float>(std::exp(z[j] - lse));
      dl[i * cols + j] = (p - (static_cast<size_t>(labels[i]) == j ? 1.0f : 0.0f)) *
                         inv_rows;
    }
  }
  return make_loss_node(logits, static_cast<float>(total / rows), std::move(dl));
}

TensorPtr soft_ce(const TensorPtr& logits, std::vector<float> target_rows) {
  check_logits(logits, "soft_ce");
  const size_t rows = logits->shape[0], cols = logits->shape[1];
  if (target_rows.size() != rows * cols)
    throw std::invalid_argument("soft_ce: target size mismatch");

  const float inv_rows = 1.0f / static_cast<float>(rows);
  double total = 0.0;
  std::vector<float> dl(rows * cols);
  for (size_t i = 0; i < rows; ++i) {
    const float* z = logits->values.data() + i * cols;
    const float* q = target_rows.data() + i * cols;
    float mx = z[0];
    for (size_t j = 1; j < cols; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (size_t j = 0; j < cols; ++j) sum += std::exp(static_cast<double>(z[j]) - mx);
    const double lse = mx + std::log(sum);
    double dot = 0.0, qsum = 0.0;
    for (size_t j = 0; j < cols; ++j) {
      dot += static_cast<double>(q[j]) * z[j];
      qsum += q[j];
    }
    total += qsum * lse - dot;
    for (size_t j = 0; j < cols; ++j) {
      const float p = static_cast<float>(std::exp(z[j] - lse));
      dl[i * cols + j] = (static_cast<float>(qsum) * p - q[j]) * inv_rows;
    }
  }
  return make_loss_node(logits, static_cast<float>(total / rows), std::move(dl));
}

}  // namespace mesc::nn
