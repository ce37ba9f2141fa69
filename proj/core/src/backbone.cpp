#include "mesc/backbone/backbone.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "mesc/corpus/vocab.hpp"
#include "mesc/nn/losses.hpp"
#include "mesc/nn/ops.hpp"
#include "mesc/parallel.hpp"

namespace mesc::backbone {

std::string mode_name(Mode m) {
  return m == Mode::bidirectional_cls ? "bidirectional_cls" : "causal_last_token";
}

Mode mode_from_name(const std::string& name) {
  if (name == "bidirectional_cls") return Mode::bidirectional_cls;
  if (name == "causal_last_token") return Mode::causal_last_token;
  throw std::invalid_argument("unknown backbone mode '" + name +
                              "' (expected bidirectional_cls|causal_last_token)");
}

void BackboneConfig::validate() const {
  if (vocab_size < 3) throw std::invalid_argument("backbone: vocab_size too small");
  if (num_layers == 0) throw std::invalid_argument("backbone: num_layers must be >= 1");
  if (extract_layers == 0 || extract_layers > num_layers)
    throw std::invalid_argument("backbone: extract_layers l=" +
                                std::to_string(extract_layers) +
                                " must satisfy 1 <= l <= num_layers=" +
                                std::to_string(num_layers));
  if (d == 0 || heads == 0 || d % heads != 0)
    throw std::invalid_argument("backbone: model dim must be divisible by heads");
  if (logit_width == 0) throw std::invalid_argument("backbone: logit_width must be >= 1");
}

void BackboneModel::init(const BackboneConfig& c, Rng& rng) {
  c.validate();
  cfg = c;
  tok_emb = nn::Tensor::make({cfg.vocab_size, cfg.d}, true);
  pos_emb = nn::Tensor::make({cfg.max_positions, cfg.d}, true);
  nn::init_normal(*tok_emb, rng, 0.02f);
  nn::init_normal(*pos_emb, rng, 0.02f);
  layers.assign(cfg.num_layers, {});
  for (auto& l : layers) l.init(cfg.d, cfg.heads, cfg.ffn_dim, rng);
  cls_w = nn::Tensor::make({cfg.d, cfg.logit_width}, true);
  cls_b = nn::Tensor::make({cfg.logit_width}, true);
  nn::init_normal(*cls_w, rng, 0.02f);
}

std::vector<nn::NamedParam> BackboneModel::params() const {
  std::vector<nn::NamedParam> out;
  out.push_back({"tok_emb", tok_emb});
  out.push_back({"pos_emb", pos_emb});
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].collect("layer" + std::to_string(i), out);
  out.push_back({"cls_w", cls_w});
  out.push_back({"cls_b", cls_b});
  return out;
}

BackboneForward backbone_forward(const BackboneModel& m,
                                 const std::vector<int>& token_ids,
                                 const std::vector<uint8_t>& pad_mask,
                                 bool capture_layers) {
  if (token_ids.size() != pad_mask.size())
    throw std::invalid_argument("backbone_forward: mask length mismatch");
  const bool causal = m.cfg.mode == Mode::causal_last_token;

  std::vector<size_t> ids;
  std::vector<uint8_t> valid;
  if (!causal) {
    ids.push_back(corpus::Vocabulary::kCls);
    valid.push_back(1);
  }
  for (size_t i = 0; i < token_ids.size(); ++i) {
    if (token_ids[i] < 0 || static_cast<size_t>(token_ids[i]) >= m.cfg.vocab_size)
      throw std::invalid_argument("backbone_forward: token id out of vocabulary");
    ids.push_back(static_cast<size_t>(token_ids[i]));
    valid.push_back(pad_mask[i]);
  }
  const size_t n = ids.size();
  if (n > m.cfg.max_positions)
    throw std::invalid_argument("backbone_forward: chunk of " + std::to_string(n) +
                                " positions exceeds max_positions=" +
                                std::to_string(m.cfg.max_positions));

  size_t pool_idx = 0;
  if (causal) {
    size_t last = 0;
    bool any = false;
    for (size_t i = 0; i < valid.size(); ++i)
      if (valid[i]) {
        last = i;
        any = true;
      }
    if (!any) throw std::invalid_argument("backbone_forward: all-pad chunk");
    pool_idx = last;
  }

  auto x = nn::add(nn::select_rows(m.tok_emb, ids), nn::first_rows(m.pos_emb, n));
  auto bias = nn::make_attention_bias(valid, causal);
  BackboneForward out;
  const size_t first_captured = m.cfg.num_layers - m.cfg.extract_layers;
  for (size_t li = 0; li < m.layers.size(); ++li) {
    x = nn::encoder_layer_forward(x, m.layers[li], bias);
    if (capture_layers && li >= first_captured)
      out.captured.push_back(nn::select_rows(x, {pool_idx}));
  }
  out.pooled = capture_layers ? out.captured.back() : nn::select_rows(x, {pool_idx});
  out.logits = nn::add_row_vector(nn::matmul(out.pooled, m.cls_w), m.cls_b);
  return out;
}

namespace {

// Mean task loss over one document's chunk batch (Eq. 1).
nn::TensorPtr doc_loss(const BackboneModel& m, const chunker::ChunkSet& cs,
                       const corpus::CorpusTask& task, LossWiring wiring) {
  std::vector<nn::TensorPtr> rows;
  rows.reserve(cs.chunks.size());
  for (const auto& ch : cs.chunks)
    rows.push_back(backbone_forward(m, ch.token_ids, ch.pad_mask, false).logits);
  std::vector<const std::vector<int>*> labels(rows.size(), &cs.gold_labels);
  return task_loss(nn::concat_rows(rows), labels, task, wiring);
}

}  // namespace

std::vector<std::vector<int>> predict_chunks(const BackboneModel& m,
                                             const chunker::ChunkSet& cs,
                                             const corpus::CorpusTask& task) {
  nn::NoGradGuard ng;
  std::vector<std::vector<int>> out;
  out.reserve(cs.chunks.size());
  for (const auto& ch : cs.chunks) {
    auto fwd = backbone_forward(m, ch.token_ids, ch.pad_mask, false);
    out.push_back(
        predict_labels(fwd.logits->values.data(), m.cfg.logit_width, task));
  }
  return out;
}

double chunk_level_accuracy(const BackboneModel& m,
                            const std::vector<chunker::ChunkSet>& docs,
                            const corpus::CorpusTask& task, size_t workers) {
  if (docs.empty()) return 0.0;
  std::vector<size_t> hits(docs.size(), 0), totals(docs.size(), 0);
  parallel_for(docs.size(), workers, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto preds = predict_chunks(m, docs[i], task);
      totals[i] = preds.size();
      for (const auto& p : preds)
        if (p == docs[i].gold_labels) ++hits[i];
    }
  });
  const size_t hit = std::accumulate(hits.begin(), hits.end(), size_t{0});
  const size_t total = std::accumulate(totals.begin(), totals.end(), size_t{0});
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

Stage1Result finetune_stage1(BackboneModel& m,
                             const std::vector<chunker::ChunkSet>& train,
                             const std::vector<chunker::ChunkSet>& val,
                             const corpus::CorpusTask& task,
                             const Stage1TrainConfig& tc) {
  if (train.empty()) throw std::invalid_argument("finetune_stage1: empty training set");
  auto params = m.params();
  nn::AdamConfig acfg = tc.adam;
  acfg.lr = tc.lr;
  nn::Adam opt(acfg);
  Rng rng(derive_seed(tc.seed, "stage1.order"));

  Stage1Result result;
  double best_metric = -1.0;
  std::vector<std::vector<float>> best_params;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    nn::GradSink sink;
    for (size_t step = 0; step < order.size(); ++step) {
      const auto& cs = train[order[step]];
      auto loss = doc_loss(m, cs, task, tc.wiring);
      if (!std::isfinite(loss->values[0]))
        throw std::runtime_error("finetune_stage1: non-finite loss at epoch " +
                                 std::to_string(epoch) + " step " +
                                 std::to_string(step + 1));
      loss_sum += loss->values[0];
      sink.clear();
      nn::backward(loss, &sink);
      opt.step(params, sink);
      if (tc.log_every && (step + 1) % tc.log_every == 0)
        std::fprintf(stderr, "[stage1] epoch %zu step %zu/%zu loss %.4f\n", epoch,
                     step + 1, order.size(), loss->values[0]);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_accuracy = chunk_level_accuracy(m, val, task);
    result.history.push_back(rec);
    if (rec.val_accuracy > best_metric) {
      best_metric = rec.val_accuracy;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& p : params) best_params.push_back(p.tensor->values);
    }
  }

  if (!best_params.empty())
    for (size_t i = 0; i < params.size(); ++i)
      params[i].tensor->values = best_params[i];
  return result;
}

}  // namespace mesc::backbone
