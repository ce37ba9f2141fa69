#pragma once

#include <vector>

#include "mesc/nn/tensor.hpp"

namespace mesc::nn {

// All losses consume raw logits, reduce to a scalar as mean over batch rows,
// and are fused nodes (numerically stable forward, closed-form backward).

// Per-element sigmoid BCE, summed across columns, averaged over rows.
// targets is row-major [rows*cols] with entries in {0,1}.
// cols==1 gives plain binary cross-entropy.
TensorPtr bce_with_logits(const TensorPtr& logits, std::vector<float> targets);

// Softmax cross-entropy with one hard label per row.
TensorPtr softmax_ce(const TensorPtr& logits, std::vector<int> labels);

// Softmax cross-entropy against per-row target distributions q (row-major,
// each row summing to <= 1): mean_b [logsumexp(z_b) - sum_c q_bc * z_bc].
TensorPtr soft_ce(const TensorPtr& logits, std::vector<float> target_rows);

// Inference-side helpers (no autograd).
float sigmoid(float z);
std::vector<float> softmax_vector(const std::vector<float>& z);

}  // namespace mesc::nn
