#pragma once

#include <cstdint>
#include <vector>

#include "mesc/nn/tensor.hpp"

namespace mesc::nn {

// Raw row-major matmul kernels (no autograd). Output is overwritten.
// mm_nn: c[m,n] = a[m,k] * b[k,n]
// mm_nt: c[m,n] = a[m,k] * b[n,k]^T
// mm_tn: c[m,n] = a[k,m]^T * b[k,n]
void mm_nn(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);
void mm_nt(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);
void mm_tn(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);

// Autograd ops. All tensors are 2-d ([rows, cols]) unless noted.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);     // [m,k]*[k,n]
TensorPtr matmul_nt(const TensorPtr& a, const TensorPtr& b);  // [m,k]*[n,k]^T
TensorPtr add(const TensorPtr& a, const TensorPtr& b);        // same shape
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);        // elementwise
TensorPtr scale(const TensorPtr& a, float s);
TensorPtr add_row_vector(const TensorPtr& a, const TensorPtr& v);  // [m,n] + [n]

TensorPtr softmax_rows(const TensorPtr& a);
TensorPtr layer_norm_rows(const TensorPtr& x, const TensorPtr& gamma,
                          const TensorPtr& beta, float eps = 1e-5f);
TensorPtr gelu(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);

// Gathers rows `ids` of x into a [ids.size(), cols] tensor (embedding lookup,
// CLS / last-token selection). Backward scatter-adds.
TensorPtr select_rows(const TensorPtr& x, std::vector<size_t> ids);
// First m rows of x (positional-embedding prefix).
TensorPtr first_rows(const TensorPtr& x, size_t m);
TensorPtr concat_cols(const std::vector<TensorPtr>& xs);
TensorPtr concat_rows(const std::vector<TensorPtr>& xs);

// Column-wise max over rows with row_mask[i] != 0; returns [1, cols].
// Ties route the gradient to the lowest row index.
TensorPtr max_pool_rows(const TensorPtr& x, std::vector<uint8_t> row_mask);

// sum_i w[i] * x[i] over the flattened tensor; returns a scalar.
TensorPtr weighted_sum(const TensorPtr& x, std::vector<float> w);

}  // namespace mesc::nn
