#include "mesc/nn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace mesc::nn {

namespace {
// Sink receiving leaf gradients during the current backward sweep, if any.
thread_local GradSink* g_active_sink = nullptr;
thread_local int g_no_grad_depth = 0;
}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

size_t shape_numel(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<size_t> s, bool rg)
    : shape(std::move(s)), values(shape_numel(shape), 0.0f), requires_grad(rg) {}

TensorPtr Tensor::make(std::vector<size_t> shape, bool requires_grad) {
  return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr Tensor::from(std::vector<size_t> shape, std::vector<float> vals,
                       bool requires_grad) {
  if (shape_numel(shape) != vals.size())
    throw std::invalid_argument("tensor shape " + shape_str(shape) +
                                " does not match " + std::to_string(vals.size()) +
                                " values");
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->values = std::move(vals);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::scalar(float v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

float Tensor::item() const {
  if (values.size() != 1)
    throw std::logic_error("item() on tensor with " + std::to_string(values.size()) +
                           " elements");
  return values[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0f);
}

void Tensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0f);
}

bool Tensor::all_finite() const {
  for (float v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void GradSink::add(const Tensor* param, const float* delta, size_t n) {
  auto& buf = grads_[param];
  if (buf.empty()) buf.assign(n, 0.0f);
  for (size_t i = 0; i < n; ++i) buf[i] += delta[i];
}

const std::vector<float>* GradSink::find(const Tensor* param) const {
  auto it = grads_.find(param);
  return it == grads_.end() ? nullptr : &it->second;
}

void GradSink::merge(const GradSink& other) {
  for (const auto& [param, buf] : other.grads_) add(param, buf.data(), buf.size());
}

void GradSink::scale(float s) {
  for (auto& [param, buf] : grads_)
    for (float& v : buf) v *= s;
}

void accumulate_grad(Tensor& t, const float* delta, size_t n) {
  if (!t.requires_grad) return;
  if (t.is_leaf() && g_active_sink != nullptr) {
    g_active_sink->add(&t, delta, n);
    return;
  }
  t.ensure_grad();
  for (size_t i = 0; i < n; ++i) t.grad[i] += delta[i];
}

void backward(const TensorPtr& loss, GradSink* sink) {
  if (!loss) throw std::invalid_argument("backward on null tensor");
  if (loss->numel() != 1) throw std::invalid_argument("backward expects a scalar loss");
  if (!loss->requires_grad) return;

  // Post-order DFS; reversed it gives a valid execution order for backward.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> seen;
  std::vector<std::pair<Tensor*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  GradSink* prev = g_active_sink;
  g_active_sink = sink;
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backward_fn) node->backward_fn();
  }
  g_active_sink = prev;
}

}  // namespace mesc::nn
