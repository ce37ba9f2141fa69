#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace mesc::nn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major float32 tensor, doubling as a reverse-mode autograd node.
// Ops record parents and a backward closure on their output; leaves carry
// parameters or frozen inputs.
class Tensor {
 public:
  std::vector<size_t> shape;
  std::vector<float> values;
  bool requires_grad = false;
  std::vector<float> grad;  // sized lazily, same length as values

  // autograd bookkeeping (empty on leaves)
  std::vector<TensorPtr> parents;
  std::function<void()> backward_fn;

  Tensor() = default;
  Tensor(std::vector<size_t> s, bool rg);

  static TensorPtr make(std::vector<size_t> shape, bool requires_grad = false);
  static TensorPtr from(std::vector<size_t> shape, std::vector<float> vals,
                        bool requires_grad = false);
  static TensorPtr scalar(float v, bool requires_grad = false);

  size_t numel() const { return values.size(); }
  size_t rank() const { return shape.size(); }
  size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }
  bool is_leaf() const { return parents.empty(); }

  float item() const;
  void ensure_grad();
  void zero_grad();
  bool all_finite() const;
};

size_t shape_numel(const std::vector<size_t>& shape);
std::string shape_str(const std::vector<size_t>& shape);

// A trainable tensor with a stable name (checkpoint key, optimizer identity).
struct NamedParam {
  std::string name;
  TensorPtr tensor;
};

// Collects gradients of leaf parameters out-of-place so independent graphs
// can run backward on worker threads without touching shared Tensor::grad.
class GradSink {
 public:
  void add(const Tensor* param, const float* delta, size_t n);
  const std::vector<float>* find(const Tensor* param) const;
  // Adds `other`'s buffers into this sink; call in a fixed worker order.
  void merge(const GradSink& other);
  void scale(float s);
  void clear() { grads_.clear(); }

 private:
  std::unordered_map<const Tensor*, std::vector<float>> grads_;
};

// Reverse-mode sweep from a scalar loss. With a sink, gradients of leaf
// tensors land in the sink; without one they accumulate in Tensor::grad.
void backward(const TensorPtr& loss, GradSink* sink = nullptr);

// While alive on a thread, ops built on that thread do not record autograd
// state (inference/extraction paths). Nestable.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// Routes a gradient contribution to `t` honoring the active sink.
void accumulate_grad(Tensor& t, const float* delta, size_t n);

}  // namespace mesc::nn
