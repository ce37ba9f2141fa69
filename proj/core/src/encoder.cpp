#include "mesc/nn/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace mesc::nn {

namespace {
constexpr float kMaskNegative = -1e30f;
constexpr float kInitStddev = 0.02f;
}  // namespace

void init_normal(Tensor& t, Rng& rng, float stddev) {
  for (float& v : t.values) v = static_cast<float>(rng.normal(0.0, stddev));
}

void EncoderLayerParams::init(size_t d_model, size_t num_heads, size_t ffn_dim,
                              Rng& rng) {
  if (num_heads == 0 || d_model % num_heads != 0)
    throw std::invalid_argument("encoder: model dim " + std::to_string(d_model) +
                                " not divisible by " + std::to_string(num_heads) +
                                " heads");
  d = d_model;
  heads = num_heads;
  dff = ffn_dim;
  dk = d / heads;

  wq.clear();
  wk.clear();
  wv.clear();
  wo.clear();
  for (size_t h = 0; h < heads; ++h) {
    wq.push_back(Tensor::make({d, dk}, true));
    wk.push_back(Tensor::make({d, dk}, true));
    wv.push_back(Tensor::make({d, dk}, true));
    wo.push_back(Tensor::make({dk, d}, true));
    init_normal(*wq.back(), rng, kInitStddev);
    init_normal(*wk.back(), rng, kInitStddev);
    init_normal(*wv.back(), rng, kInitStddev);
    init_normal(*wo.back(), rng, kInitStddev);
  }
  w1 = Tensor::make({d, dff}, true);
  b1 = Tensor::make({dff}, true);
  w2 = Tensor::make({dff, d}, true);
  b2 = Tensor::make({d}, true);
  init_normal(*w1, rng, kInitStddev);
  init_normal(*w2, rng, kInitStddev);

  ln1_g = Tensor::make({d}, true);
  ln1_b = Tensor::make({d}, true);
  ln2_g = Tensor::make({d}, true);
  ln2_b = Tensor::make({d}, true);
  std::fill(ln1_g->values.begin(), ln1_g->values.end(), 1.0f);
  std::fill(ln2_g->values.begin(), ln2_g->values.end(), 1.0f);
}

void EncoderLayerParams::collect(const std::string& prefix,
                                 std::vector<NamedParam>& out) const {
  for (size_t h = 0; h < heads; ++h) {
    const std::string hs = std::to_string(h);
    out.push_back({prefix + ".wq" + hs, wq[h]});
    out.push_back({prefix + ".wk" + hs, wk[h]});
    out.push_back({prefix + ".wv" + hs, wv[h]});
    out.push_back({prefix + ".wo" + hs, wo[h]});
  }
  out.push_back({prefix + ".ffn_w1", w1});
  out.push_back({prefix + ".ffn_b1", b1});
  out.push_back({prefix + ".ffn_w2", w2});
  out.push_back({prefix + ".ffn_b2", b2});
  out.push_back({prefix + ".ln1_g", ln1_g});
  out.push_back({prefix + ".ln1_b", ln1_b});
  out.push_back({prefix + ".ln2_g", ln2_g});
  out.push_back({prefix + ".ln2_b", ln2_b});
}

TensorPtr make_attention_bias(const std::vector<uint8_t>& valid, bool causal) {
  const size_t n = valid.size();
  auto bias = Tensor::make({n, n});
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      const bool blocked = !valid[j] || (causal && j > i);
      bias->values[i * n + j] = blocked ? kMaskNegative : 0.0f;
    }
  return bias;
}

TensorPtr encoder_layer_forward(const TensorPtr& x, const EncoderLayerParams& p,
                                const TensorPtr& attn_bias) {
  if (x->rank() != 2 || x->shape[1] != p.d)
    throw std::invalid_argument("encoder_layer_forward: input " + shape_str(x->shape) +
                                " does not match model dim " + std::to_string(p.d));
  const size_t n = x->shape[0];
  if (attn_bias && (attn_bias->shape[0] != n || attn_bias->shape[1] != n))
    throw std::invalid_argument("encoder_layer_forward: attention bias shape mismatch");

  auto z = layer_norm_rows(x, p.ln1_g, p.ln1_b);
  const float inv_sqrt_dk = 1.0f / std::sqrt(static_cast<float>(p.dk));
  TensorPtr attn;
  for (size_t h = 0; h < p.heads; ++h) {
    auto q = matmul(z, p.wq[h]);
    auto k = matmul(z, p.wk[h]);
    auto v = matmul(z, p.wv[h]);
    auto s = scale(matmul_nt(q, k), inv_sqrt_dk);
    if (attn_bias) s = add(s, attn_bias);
    auto ctx = matmul(softmax_rows(s), v);
    auto proj = matmul(ctx, p.wo[h]);
    attn = attn ? add(attn, proj) : proj;
  }
  auto a = add(x, attn);

  auto z2 = layer_norm_rows(a, p.ln2_g, p.ln2_b);
  auto hidden = gelu(add_row_vector(matmul(z2, p.w1), p.b1));
  auto ffn_out = add_row_vector(matmul(hidden, p.w2), p.b2);
  return add(a, ffn_out);
}

TensorPtr encoder_layer_forward(const TensorPtr& x, const EncoderLayerParams& p,
                                bool causal, const std::vector<uint8_t>& valid) {
  TensorPtr bias;
  bool all_valid = true;
  for (uint8_t b : valid) all_valid &= b != 0;
  if (causal || !all_valid) bias = make_attention_bias(valid, causal);
  return encoder_layer_forward(x, p, bias);
}

}  // namespace mesc::nn
