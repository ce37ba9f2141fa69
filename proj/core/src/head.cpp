#include "mesc/head/head.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mesc/nn/ops.hpp"

namespace mesc::head {

std::string combine_mode_name(CombineMode m) {
  return m == CombineMode::concat ? "concat" : "add";
}

CombineMode combine_mode_from_name(const std::string& name) {
  if (name == "concat") return CombineMode::concat;
  if (name == "add") return CombineMode::elementwise_add;
  throw std::invalid_argument("unknown combine mode: " + name);
}

void HeadConfig::validate(size_t l) const {
  if (p < 1 || p > l)
    throw std::invalid_argument("head: p must be in [1, l], got p=" +
                                std::to_string(p) + " l=" + std::to_string(l));
  if (d == 0) throw std::invalid_argument("head: d must be positive");
  if (num_outputs == 0) throw std::invalid_argument("head: num_outputs must be positive");
  if (max_chunks == 0) throw std::invalid_argument("head: max_chunks must be positive");
  if (heads == 0 || d_f() % heads != 0)
    throw std::invalid_argument("head: heads must divide d_f");
  if (ffn_t_width == 0 || ffn_i_width == 0)
    throw std::invalid_argument("head: FFN widths must be positive");
  if (use_structure && num_structure_bins == 0)
    throw std::invalid_argument("head: structure enabled but no histogram bins");
}

namespace {

nn::TensorPtr make_weight(size_t in, size_t out, Rng& rng) {
  auto t = nn::Tensor::make({in, out}, true);
  nn::init_normal(*t, rng, 0.02f);
  return t;
}

nn::TensorPtr make_bias(size_t n) { return nn::Tensor::make({n}, true); }

size_t ffn_i_input(const HeadConfig& cfg) {
  return cfg.ffn_t_width + (cfg.use_structure ? cfg.num_structure_bins : 0);
}

}  // namespace

void HeadModel::init(const HeadConfig& cfg, Rng& rng) {
  config = cfg;
  const size_t df = cfg.d_f();
  pos = nn::Tensor::make({cfg.max_chunks, df}, true);
  nn::init_normal(*pos, rng, 0.02f);
  layers.assign(cfg.t, {});
  for (auto& layer : layers) layer.init(df, cfg.heads, 4 * df, rng);
  ffn_t_w = make_weight(df, cfg.ffn_t_width, rng);
  ffn_t_b = make_bias(cfg.ffn_t_width);
  ffn_i_w = make_weight(ffn_i_input(cfg), cfg.ffn_i_width, rng);
  ffn_i_b = make_bias(cfg.ffn_i_width);
  ffn_e_w = make_weight(cfg.ffn_i_width, cfg.num_outputs, rng);
  ffn_e_b = make_bias(cfg.num_outputs);
}

std::vector<nn::NamedParam> HeadModel::params() {
  std::vector<nn::NamedParam> out;
  out.push_back({"pos", pos});
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].collect("enc" + std::to_string(i), out);
  out.push_back({"ffn_t_w", ffn_t_w});
  out.push_back({"ffn_t_b", ffn_t_b});
  out.push_back({"ffn_i_w", ffn_i_w});
  out.push_back({"ffn_i_b", ffn_i_b});
  out.push_back({"ffn_e_w", ffn_e_w});
  out.push_back({"ffn_e_b", ffn_e_b});
  return out;
}

std::vector<float> combine_layers(const backbone::EmbeddingStore::DocRecord& doc,
                                  size_t l, size_t d, size_t p, CombineMode mode) {
  if (p < 1 || p > l)
    throw std::invalid_argument("combine_layers: p must be in [1, l]");
  const size_t n = doc.n_chunks;
  if (doc.data.size() != n * l * d)
    throw std::invalid_argument("combine_layers: record size mismatch for doc " +
                                doc.id);
  const size_t width = mode == CombineMode::concat ? p * d : d;
  std::vector<float> out(n * width, 0.0f);
  for (size_t i = 0; i < n; ++i) {
    float* row = out.data() + i * width;
    for (size_t j = 0; j < p; ++j) {
      // Stored rows are ordered deepest-last; walk back from the deepest.
      const float* src = doc.chunk_layer(i, l - 1 - j, l, d);
      if (mode == CombineMode::concat)
        std::memcpy(row + j * d, src, d * sizeof(float));
      else
        for (size_t k = 0; k < d; ++k) row[k] += src[k];
    }
  }
  return out;
}

HeadOutput head_forward(const HeadModel& model, const std::vector<float>& combined,
                        size_t n_chunks, const std::vector<float>* histogram,
                        size_t pad_to) {
  const HeadConfig& cfg = model.config;
  const size_t df = cfg.d_f();
  if (n_chunks == 0) throw std::invalid_argument("head_forward: empty document");
  if (combined.size() != n_chunks * df)
    throw std::invalid_argument("head_forward: combined width mismatch");
  if (cfg.use_structure) {
    if (histogram == nullptr)
      throw std::invalid_argument("head_forward: structure histogram missing");
    if (histogram->size() != cfg.num_structure_bins)
      throw std::invalid_argument("head_forward: histogram bin count mismatch");
  }
  if (pad_to > cfg.max_chunks)
    throw std::invalid_argument("head_forward: pad_to exceeds max_chunks");

  // Long documents keep their most recent chunks.
  const size_t n_valid = std::min(n_chunks, cfg.max_chunks);
  const size_t skip = n_chunks - n_valid;
  const size_t n_rows = std::max(n_valid, pad_to);

  std::vector<float> rows(n_rows * df, 0.0f);
  std::memcpy(rows.data(), combined.data() + skip * df,
              n_valid * df * sizeof(float));
  std::vector<uint8_t> valid(n_rows, 0);
  std::fill(valid.begin(), valid.begin() + static_cast<long>(n_valid), uint8_t{1});

  auto x = nn::Tensor::from({n_rows, df}, std::move(rows));
  x = nn::add(x, nn::first_rows(model.pos, n_rows));
  for (const auto& layer : model.layers)
    x = nn::encoder_layer_forward(x, layer, /*causal=*/false, valid);

  auto pooled = nn::max_pool_rows(x, valid);
  auto g = nn::gelu(
      nn::add_row_vector(nn::matmul(pooled, model.ffn_t_w), model.ffn_t_b));

  nn::TensorPtr z = g;
  if (cfg.use_structure) {
    auto hist = nn::Tensor::from({1, cfg.num_structure_bins}, *histogram);
    z = nn::concat_cols({g, hist});
  }
  auto a = nn::add_row_vector(nn::matmul(z, model.ffn_i_w), model.ffn_i_b);
  auto h = cfg.ffn_i_gelu ? nn::gelu(a) : nn::softmax_rows(a);
  auto logits = nn::add_row_vector(nn::matmul(h, model.ffn_e_w), model.ffn_e_b);
  if (!logits->all_finite())
    throw std::runtime_error("head_forward: non-finite logits for document");
  return {logits, g};
}

std::vector<HeadExample> make_head_examples(
    const backbone::EmbeddingStore& store, const std::vector<std::string>& ids,
    const std::unordered_map<std::string, const structure::StructureLabels*>*
        structures,
    const HeadConfig& cfg) {
  cfg.validate(store.l);
  if (cfg.d != store.d)
    throw std::invalid_argument("make_head_examples: store width " +
                                std::to_string(store.d) + " != config d " +
                                std::to_string(cfg.d));
  std::vector<HeadExample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto* rec = store.find(id);
    if (rec == nullptr)
      throw std::invalid_argument("make_head_examples: doc not in store: " + id);
    HeadExample ex;
    ex.doc_id = id;
    ex.n_chunks = rec->n_chunks;
    ex.combined = combine_layers(*rec, store.l, store.d, cfg.p, cfg.combine);
    ex.gold = rec->gold_labels;
    if (cfg.use_structure) {
      if (structures == nullptr)
        throw std::invalid_argument("make_head_examples: structure labels missing");
      const auto it = structures->find(id);
      if (it == structures->end())
        throw std::invalid_argument(
            "make_head_examples: no structure labels for doc " + id);
      ex.histogram = it->second->histogram;
      if (ex.histogram.size() != cfg.num_structure_bins)
        throw std::invalid_argument(
            "make_head_examples: histogram width mismatch for doc " + id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

double example_loss_and_match(const HeadModel& model, const HeadExample& ex,
                              const corpus::CorpusTask& task, LossWiring wiring,
                              bool* matched) {
  const auto out =
      head_forward(model, ex.combined, ex.n_chunks,
                   ex.histogram.empty() ? nullptr : &ex.histogram, 0);
  const auto loss = task_loss(out.logits, {&ex.gold}, task, wiring);
  if (matched != nullptr) {
    const auto pred = predict_labels(out.logits->values.data(),
                                     out.logits->cols(), task);
    *matched = pred == ex.gold;
  }
  return loss->item();
}

std::vector<std::vector<float>> snapshot_params(
    const std::vector<nn::NamedParam>& params) {
  std::vector<std::vector<float>> snap;
  snap.reserve(params.size());
  for (const auto& p : params) snap.push_back(p.tensor->values);
  return snap;
}

void restore_params(const std::vector<nn::NamedParam>& params,
                    const std::vector<std::vector<float>>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i].tensor->values = snap[i];
}

}  // namespace

HeadEvalStats evaluate_head(const HeadModel& model,
                            const std::vector<HeadExample>& examples,
                            const corpus::CorpusTask& task, LossWiring wiring) {
  HeadEvalStats stats;
  if (examples.empty()) return stats;
  nn::NoGradGuard guard;
  size_t matches = 0;
  double loss_sum = 0.0;
  for (const auto& ex : examples) {
    bool matched = false;
    loss_sum += example_loss_and_match(model, ex, task, wiring, &matched);
    matches += matched ? 1 : 0;
  }
  stats.loss = loss_sum / static_cast<double>(examples.size());
  stats.accuracy = static_cast<double>(matches) / static_cast<double>(examples.size());
  return stats;
}

HeadTrainResult train_head(const std::vector<HeadExample>& train,
                           const std::vector<HeadExample>& val,
                           const HeadConfig& cfg, const corpus::CorpusTask& task,
                           LossWiring wiring, const HeadTrainConfig& tcfg) {
  if (train.empty()) throw std::invalid_argument("train_head: no training docs");
  if (cfg.num_outputs != task.logit_width())
    throw std::invalid_argument("train_head: num_outputs != task logit width");
  if (tcfg.batch_size == 0)
    throw std::invalid_argument("train_head: batch_size must be positive");

  Rng rng(tcfg.seed);
  HeadTrainResult result;
  result.model.init(cfg, rng);
  auto params = result.model.params();

  nn::AdamConfig acfg;
  acfg.lr = tcfg.lr;
  nn::Adam adam(acfg);

  const auto& eval_set = val.empty() ? train : val;
  auto best_snap = snapshot_params(params);
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();

  for (size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    // Similar-length documents share a batch; the shuffle breaks ties.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return train[a].n_chunks < train[b].n_chunks;
    });

    double loss_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const size_t end = std::min(order.size(), start + tcfg.batch_size);
      size_t pad_to = 0;
      for (size_t i = start; i < end; ++i)
        pad_to = std::max(pad_to,
                          std::min(train[order[i]].n_chunks, cfg.max_chunks));

      nn::TensorPtr batch_loss;
      for (size_t i = start; i < end; ++i) {
        const auto& ex = train[order[i]];
        const auto out = head_forward(
            result.model, ex.combined, ex.n_chunks,
            ex.histogram.empty() ? nullptr : &ex.histogram, pad_to);
        const auto loss = task_loss(out.logits, {&ex.gold}, task, wiring);
        batch_loss = batch_loss ? nn::add(batch_loss, loss) : loss;
      }
      batch_loss = nn::scale(batch_loss, 1.0f / static_cast<float>(end - start));
      const double batch_value = batch_loss->item();
      if (!std::isfinite(batch_value))
        throw std::runtime_error("train_head: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch starting " +
                                 std::to_string(start));
      loss_sum += batch_value * static_cast<double>(end - start);

      nn::GradSink sink;
      nn::backward(batch_loss, &sink);
      adam.step(params, sink);
    }

    const auto stats = evaluate_head(result.model, eval_set, task, wiring);
    HeadEpochStats rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.val_loss = stats.loss;
    rec.val_accuracy = stats.accuracy;
    result.history.push_back(rec);

    const bool better = stats.accuracy > best_acc ||
                        (stats.accuracy == best_acc && stats.loss < best_loss);
    if (better) {
      best_acc = stats.accuracy;
      best_loss = stats.loss;
      best_snap = snapshot_params(params);
      result.best_epoch = static_cast<int>(epoch);
    }
  }

  if (tcfg.epochs > 0) restore_params(params, best_snap);
  result.final_eval = evaluate_head(result.model, eval_set, task, wiring);
  return result;
}

}  // namespace mesc::head
