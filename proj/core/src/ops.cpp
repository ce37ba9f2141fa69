#include "mesc/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mesc::nn {

namespace {

void check_2d(const TensorPtr& t, const char* who) {
  if (t->rank() != 2)
    throw std::invalid_argument(std::string(who) + " expects a 2-d tensor, got " +
                                shape_str(t->shape));
}

TensorPtr make_out(std::vector<size_t> shape, std::initializer_list<TensorPtr> parents) {
  auto out = Tensor::make(std::move(shape));
  if (!grad_enabled()) return out;
  for (const auto& p : parents) {
    out->parents.push_back(p);
    if (p->requires_grad) out->requires_grad = true;
  }
  return out;
}

}  // namespace

void mm_nn(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
  std::fill(c, c + m * n, 0.0f);
  for (size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    float* ci = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const float aip = ai[p];
      const float* bp = b + p * n;
      for (size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void mm_nt(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const float* ai = a + i * k;
    float* ci = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const float* bj = b + j * k;
      float acc = 0.0f;
      for (size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void mm_tn(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
  std::fill(c, c + m * n, 0.0f);
  for (size_t p = 0; p < k; ++p) {
    const float* ap = a + p * m;
    const float* bp = b + p * n;
    for (size_t i = 0; i < m; ++i) {
      const float api = ap[i];
      float* ci = c + i * n;
      for (size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
  if (b->shape[0] != k)
    throw std::invalid_argument("matmul shape mismatch " + shape_str(a->shape) + " x " +
                                shape_str(b->shape));
  auto out = make_out({m, n}, {a, b});
  mm_nn(a->values.data(), b->values.data(), out->values.data(), m, k, n);
  if (out->requires_grad) {
    TensorPtr ap = a, bp = b;
    Tensor* o = out.get();
    out->backward_fn = [ap, bp, o, m, k, n]() {
      if (ap->requires_grad) {
        std::vector<float> da(m * k);
        mm_nt(o->grad.data(), bp->values.data(), da.data(), m, n, k);
        accumulate_grad(*ap, da.data(), da.size());
      }
      if (bp->requires_grad) {
        std::vector<float> db(k * n);
        mm_tn(ap->values.data(), o->grad.data(), db.data(), k, m, n);
        accumulate_grad(*bp, db.data(), db.size());
      }
    };
  }
  return out;
}

TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b) {
  check_2d(a, "matmul_nt");
  check_2d(b, "matmul_nt");
  const size_t m = a->shape[0], k = a->shape[1], n = b->shape[0];
  if (b->shape[1] != k)
    throw std::invalid_argument("matmul_nt shape mismatch " + shape_str(a->shape) +
                                " x " + shape_str(b->shape) + "^T");
  auto out = make_out({m, n}, {a, b});
  mm_nt(a->values.data(), b->values.data(), out->values.data(), m, k, n);
  if (out->requires_grad) {
    TensorPtr ap = a, bp = b;
    Tensor* o = out.get();
    out->backward_fn = [ap, bp, o, m, k, n]() {
      if (ap->requires_grad) {
        std::vector<float> da(m * k);
        mm_nn(o->grad.data(), bp->values.data(), da.data(), m, n, k);
        accumulate_grad(*ap, da.data(), da.size());
      }
      if (bp->requires_grad) {
        std::vector<float> db(n * k);
        mm_tn(o->grad.data(), ap->values.data(), db.data(), n, m, k);
        accumulate_grad(*bp, db.data(), db.size());
      }
    };
  }
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw std::invalid_argument("add shape mismatch " + shape_str(a->shape) + " vs " +
                                shape_str(b->shape));
  auto out = make_out(a->shape, {a, b});
  for (size_t i = 0; i < out->numel(); ++i) out->values[i] = a->values[i] + b->values[i];
  if (out->requires_grad) {
    TensorPtr ap = a, bp = b;
    Tensor* o = out.get();
    out->backward_fn = [ap, bp, o]() {
      accumulate_grad(*ap, o->grad.data(), o->grad.size());
      accumulate_grad(*bp, o->grad.data(), o->grad.size());
    };
  }
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape)
    throw std::invalid_argument("mul shape mismatch " + shape_str(a->shape) + " vs " +
                                shape_str(b->shape));
  auto out = make_out(a->shape, {a, b});
  for (size_t i = 0; i < out->numel(); ++i) out->values[i] = a->values[i] * b->values[i];
  if (out->requires_grad) {
    TensorPtr ap = a, bp = b;
    Tensor* o = out.get();
    out->backward_fn = [ap, bp, o]() {
      const size_t n = o->grad.size();
      std::vector<float> tmp(n);
      if (ap->requires_grad) {
        for (size_t i = 0; i < n; ++i) tmp[i] = o->grad[i] * bp->values[i];
        accumulate_grad(*ap, tmp.data(), n);
      }
      if (bp->requires_grad) {
        for (size_t i = 0; i < n; ++i) tmp[i] = o->grad[i] * ap->values[i];
        accumulate_grad(*bp, tmp.data(), n);
      }
    };
  }
  return out;
}

TensorPtr scale(const TensorPtr& a, float s) {
  auto out = make_out(a->shape, {a});
  for (size_t i = 0; i < out->numel(); ++i) out->values[i] = a->values[i] * s;
  if (out->requires_grad) {
    TensorPtr ap = a;
    Tensor* o = out.get();
    out->backward_fn = [ap, o, s]() {
      std::vector<float> tmp(o->grad.size());
      for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = o->grad[i] * s;
      accumulate_grad(*ap, tmp.data(), tmp.size());
    };
  }
  return out;
}

TensorPtr add_row_vector(const TensorPtr& a, const TensorPtr& v) {
  check_2d(a, "add_row_vector");
  const size_t m = a->shape[0], n = a->shape[1];
  if (v->numel() != n)
    throw std::invalid_argument("add_row_vector: vector length " +
                                std::to_string(v->numel()) + " vs cols " +
                                std::to_string(n));
  auto out = make_out(a->shape, {a, v});
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j)
      out->values[i * n + j] = a->values[i * n + j] + v->values[j];
  if (out->requires_grad) {
    TensorPtr ap = a, vp = v;
    Tensor* o = out.get();
    out->backward_fn = [ap, vp, o, m, n]() {
      if (ap->requires_grad) accumulate_grad(*ap, o->grad.data(), o->grad.size());
      if (vp->requires_grad) {
        std::vector<float> dv(n, 0.0f);
        for (size_t i = 0; i < m; ++i)
          for (size_t j = 0; j < n; ++j) dv[j] += o->grad[i * n + j];
        accumulate_grad(*vp, dv.data(), n);
      }
    };
  }
  return out;
}

TensorPtr softmax_rows(const TensorPtr& a) {
  check_2d(a, "softmax_rows");
  const size_t m = a->shape[0], n = a->shape[1];
  auto out = make_out(a->shape, {a});
  for (size_t i = 0; i < m; ++i) {
    const float* row = a->values.data() + i * n;
    float* po = out->values.data() + i * n;
    float mx = row[0];
    for (size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    float sum = 0.0f;
    for (size_t j = 0; j < n; ++j) {
      po[j] = std::exp(row[j] - mx);
      sum += po[j];
    }
    const float inv = 1.0f / sum;
    for (size_t j = 0; j < n; ++j) po[j] *= inv;
  }
  if (out->requires_grad) {
    TensorPtr ap = a;
    Tensor* o = out.get();
    out->backward_fn = [ap, o, m, n]() {
      std::vector<float> da(m * n);
      for (size_t i = 0; i < m; ++i) {
        const float* p = o->values.data() + i * n;
        const float* dy = o->grad.data() + i * n;
        float dot = 0.0f;
        for (size_t j = 0; j < n; ++j) dot += dy[j] * p[j];
        for (size_t j = 0; j < n; ++j) da[i * n + j] = p[j] * (dy[j] - dot);
      }
      accumulate_grad(*ap, da.data(), da.size());
    };
  }
  return out;
}

TensorPtr layer_norm_rows(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, float eps) {
  check_2d(x, "layer_norm_rows");
  const size_t m = x->shape[0], n = x->shape[1];
  if (gamma->numel() != n || beta->numel() != n)
    throw std::invalid_argument("layer_norm_rows: gamma/beta length mismatch");
  auto out = make_out(x->shape, {x, gamma, beta});
  auto xhat = std::make_shared<std::vector<float>>(m * n);
  auto inv_sigma = std::make_shared<std::vector<float>>(m);
  for (size_t i = 0; i < m; ++i) {
    const float* row = x->values.data() + i * n;
    double mu = 0.0;
    for (size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const float inv = 1.0f / std::sqrt(static_cast<float>(var) + eps);
    (*inv_sigma)[i] = inv;
    for (size_t j = 0; j < n; ++j) {
      const float xh = (row[j] - static_cast<float>(mu)) * inv;
      (*xhat)[i * n + j] = xh;
      out->values[i * n + j] = gamma->values[j] * xh + beta->values[j];
    }
  }
  if (out->requires_grad) {
    TensorPtr xp = x, gp = gamma, bp = beta;
    Tensor* o = out.get();
    out->backward_fn = [xp, gp, bp, o, xhat, inv_sigma, m, n]() {
      std::vector<float> dgamma(n, 0.0f), dbeta(n, 0.0f), dx(m * n);
      for (size_t i = 0; i < m; ++i) {
        const float* dy = o->grad.data() + i * n;
        const float* xh = xhat->data() + i * n;
        double g_mean = 0.0, gx_mean = 0.0;
        for (size_t j = 0; j < n; ++j) {
          const float g = dy[j] * gp->values[j];
          g_mean += g;
          gx_mean += g * xh[j];
          dgamma[j] += dy[j] * xh[j];
          dbeta[j] += dy[j];
        }
        g_mean /= static_cast<double>(n);
        gx_mean /= static_cast<double>(n);
        const float inv = (*inv_sigma)[i];
        for (size_t j = 0; j < n; ++j) {
          const float g = dy[j] * gp->values[j];
          dx[i * n + j] =
              inv * (g - static_cast<float>(g_mean) - xh[j] * static_cast<float>(gx_mean));
        }
      }
      if (xp->requires_grad) accumulate_grad(*xp, dx.data(), dx.size());
      if (gp->requires_grad) accumulate_grad(*gp, dgamma.data(), n);
      if (bp->requires_grad) accumulate_grad(*bp, dbeta.data(), n);
    };
  }
  return out;
}

TensorPtr gelu(const TensorPtr& x) {
  constexpr float kAlpha = 0.7978845608028654f;  // sqrt(2/pi)
  constexpr float kC = 0.044715f;
  auto out = make_out(x->shape, {x});
  for (size_t i = 0; i < x->numel(); ++i) {
    const float v = x->values[i];
    const float t = std::tanh(kAlpha * (v + kC * v * v * v));
    out->values[i] = 0.5f * v * (1.0f + t);
  }
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    out->backward_fn = [xp, o]() {
      std::vector<float> dx(o->grad.size());
      for (size_t i = 0; i < dx.size(); ++i) {
        const float v = xp->values[i];
        const float u = kAlpha * (v + kC * v * v * v);
        const float t = std::tanh(u);
        const float du = kAlpha * (1.0f + 3.0f * kC * v * v);
        const float d = 0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du;
        dx[i] = o->grad[i] * d;
      }
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

TensorPtr relu(const TensorPtr& x) {
  auto out = make_out(x->shape, {x});
  for (size_t i = 0; i < x->numel(); ++i) out->values[i] = std::max(0.0f, x->values[i]);
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    out->backward_fn = [xp, o]() {
      std::vector<float> dx(o->grad.size());
      for (size_t i = 0; i < dx.size(); ++i)
        dx[i] = xp->values[i] > 0.0f ? o->grad[i] : 0.0f;
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

TensorPtr select_rows(const TensorPtr& x, std::vector<size_t> ids) {
  check_2d(x, "select_rows");
  const size_t n = x->shape[1];
  for (size_t id : ids)
    if (id >= x->shape[0])
      throw std::out_of_range("select_rows: row " + std::to_string(id) + " out of " +
                              std::to_string(x->shape[0]));
  auto out = make_out({ids.size(), n}, {x});
  for (size_t r = 0; r < ids.size(); ++r)
    std::copy_n(x->values.data() + ids[r] * n, n, out->values.data() + r * n);
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    auto idv = std::make_shared<std::vector<size_t>>(std::move(ids));
    out->backward_fn = [xp, o, idv, n]() {
      std::vector<float> dx(xp->numel(), 0.0f);
      for (size_t r = 0; r < idv->size(); ++r) {
        const float* dy = o->grad.data() + r * n;
        float* row = dx.data() + (*idv)[r] * n;
        for (size_t j = 0; j < n; ++j) row[j] += dy[j];
      }
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

TensorPtr first_rows(const TensorPtr& x, size_t m) {
  check_2d(x, "first_rows");
  if (m > x->shape[0])
    throw std::out_of_range("first_rows: " + std::to_string(m) + " out of " +
                            std::to_string(x->shape[0]));
  const size_t n = x->shape[1];
  auto out = make_out({m, n}, {x});
  std::copy_n(x->values.data(), m * n, out->values.data());
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    out->backward_fn = [xp, o]() {
      std::vector<float> dx(xp->numel(), 0.0f);
      std::copy_n(o->grad.data(), o->grad.size(), dx.data());
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: empty input");
  const size_t m = xs[0]->shape[0];
  size_t total = 0;
  for (const auto& x : xs) {
    check_2d(x, "concat_cols");
    if (x->shape[0] != m) throw std::invalid_argument("concat_cols: row count mismatch");
    total += x->shape[1];
  }
  auto out = Tensor::make({m, total});
  if (grad_enabled())
    for (const auto& x : xs) {
      out->parents.push_back(x);
      if (x->requires_grad) out->requires_grad = true;
    }
  size_t off = 0;
  for (const auto& x : xs) {
    const size_t n = x->shape[1];
    for (size_t i = 0; i < m; ++i)
      std::copy_n(x->values.data() + i * n, n, out->values.data() + i * total + off);
    off += n;
  }
  if (out->requires_grad) {
    auto parts = std::make_shared<std::vector<TensorPtr>>(xs);
    Tensor* o = out.get();
    out->backward_fn = [parts, o, m, total]() {
      size_t off = 0;
      for (const auto& x : *parts) {
        const size_t n = x->shape[1];
        if (x->requires_grad) {
          std::vector<float> dx(m * n);
          for (size_t i = 0; i < m; ++i)
            std::copy_n(o->grad.data() + i * total + off, n, dx.data() + i * n);
          accumulate_grad(*x, dx.data(), dx.size());
        }
        off += n;
      }
    };
  }
  return out;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
  const size_t n = xs[0]->cols();
  size_t total = 0;
  for (const auto& x : xs) {
    check_2d(x, "concat_rows");
    if (x->shape[1] != n) throw std::invalid_argument("concat_rows: column mismatch");
    total += x->shape[0];
  }
  auto out = Tensor::make({total, n});
  if (grad_enabled())
    for (const auto& x : xs) {
      out->parents.push_back(x);
      if (x->requires_grad) out->requires_grad = true;
    }
  size_t row = 0;
  for (const auto& x : xs) {
    std::copy_n(x->values.data(), x->numel(), out->values.data() + row * n);
    row += x->shape[0];
  }
  if (out->requires_grad) {
    auto parts = std::make_shared<std::vector<TensorPtr>>(xs);
    Tensor* o = out.get();
    out->backward_fn = [parts, o, n]() {
      size_t row = 0;
      for (const auto& x : *parts) {
        if (x->requires_grad)
          accumulate_grad(*x, o->grad.data() + row * n, x->numel());
        row += x->shape[0];
      }
    };
  }
  return out;
}

TensorPtr max_pool_rows(const TensorPtr& x, std::vector<uint8_t> row_mask) {
  check_2d(x, "max_pool_rows");
  const size_t m = x->shape[0], n = x->shape[1];
  if (row_mask.size() != m)
    throw std::invalid_argument("max_pool_rows: mask length mismatch");
  size_t valid = 0;
  for (uint8_t b : row_mask) valid += b != 0;
  if (valid == 0) throw std::invalid_argument("max_pool_rows: no valid rows");
  auto out = make_out({1, n}, {x});
  auto argmax = std::make_shared<std::vector<size_t>>(n);
  for (size_t j = 0; j < n; ++j) {
    size_t best = m;
    float bv = 0.0f;
    for (size_t i = 0; i < m; ++i) {
      if (!row_mask[i]) continue;
      const float v = x->values[i * n + j];
      if (best == m || v > bv) {
        best = i;
        bv = v;
      }
    }
    (*argmax)[j] = best;
    out->values[j] = bv;
  }
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    out->backward_fn = [xp, o, argmax, n]() {
      std::vector<float> dx(xp->numel(), 0.0f);
      for (size_t j = 0; j < n; ++j) dx[(*argmax)[j] * n + j] += o->grad[j];
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

TensorPtr weighted_sum(const TensorPtr& x, std::vector<float> w) {
  if (w.size() != x->numel())
    throw std::invalid_argument("weighted_sum: weight length mismatch");
  auto out = make_out({1}, {x});
  double acc = 0.0;
  for (size_t i = 0; i < w.size(); ++i) acc += static_cast<double>(w[i]) * x->values[i];
  out->values[0] = static_cast<float>(acc);
  if (out->requires_grad) {
    TensorPtr xp = x;
    Tensor* o = out.get();
    auto wv = std::make_shared<std::vector<float>>(std::move(w));
    out->backward_fn = [xp, o, wv]() {
      std::vector<float> dx(wv->size());
      for (size_t i = 0; i < dx.size(); ++i) dx[i] = (*wv)[i] * o->grad[0];
      accumulate_grad(*xp, dx.data(), dx.size());
    };
  }
  return out;
}

}  // namespace mesc::nn
