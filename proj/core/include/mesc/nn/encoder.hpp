#pragma once

#include <string>
#include <vector>

#include "mesc/nn/ops.hpp"
#include "mesc/nn/tensor.hpp"
#include "mesc/rng.hpp"

namespace mesc::nn {

// One pre-norm residual transformer block: x + MHA(LN(x)), then a += FFN(LN(a)).
// Attention uses per-head projection matrices; the per-head output projections
// are summed, which equals the usual concat-then-project form.
struct EncoderLayerParams {
  size_t d = 0;      // model dim
  size_t heads = 0;  // d % heads == 0
  size_t dff = 0;    // FFN hidden dim
  size_t dk = 0;     // d / heads

  std::vector<TensorPtr> wq, wk, wv;  // per head: [d, dk]
  std::vector<TensorPtr> wo;          // per head: [dk, d]
  TensorPtr w1, b1, w2, b2;           // FFN: [d,dff],[dff],[dff,d],[d]
  TensorPtr ln1_g, ln1_b, ln2_g, ln2_b;

  void init(size_t d_model, size_t num_heads, size_t ffn_dim, Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

// Additive attention bias [n, n]: 0 where key j may be attended from query i,
// -1e30 otherwise (pad keys, and j > i in causal mode). The -1e30 entries
// underflow to exact zeros after softmax, so masking is exact in float32.
TensorPtr make_attention_bias(const std::vector<uint8_t>& valid, bool causal);

TensorPtr encoder_layer_forward(const TensorPtr& x, const EncoderLayerParams& p,
                                const TensorPtr& attn_bias);

// Convenience wrapper matching the pipeline call sites.
TensorPtr encoder_layer_forward(const TensorPtr& x, const EncoderLayerParams& p,
                                bool causal, const std::vector<uint8_t>& valid);

void init_normal(Tensor& t, Rng& rng, float stddev);

}  // namespace mesc::nn
