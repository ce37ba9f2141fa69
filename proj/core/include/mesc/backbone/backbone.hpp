#pragma once

#include <string>
#include <vector>

#include "mesc/chunker/chunker.hpp"
#include "mesc/corpus/document.hpp"
#include "mesc/nn/adam.hpp"
#include "mesc/nn/encoder.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::backbone {

enum class Mode { bidirectional_cls, causal_last_token };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct BackboneConfig {
  Mode mode = Mode::bidirectional_cls;
  size_t num_layers = 4;
  size_t d = 64;
  size_t heads = 4;
  size_t ffn_dim = 128;
  size_t max_positions = 0;  // 0 = derived: chunk width (+1 for the CLS slot)
  size_t vocab_size = 0;
  size_t extract_layers = 4;  // l, capped by num_layers
  size_t logit_width = 1;     // Stage-1 classifier width (task logit width)

  void validate() const;
};

struct BackboneModel {
  BackboneConfig cfg;
  nn::TensorPtr tok_emb;  // [vocab, d]
  nn::TensorPtr pos_emb;  // [max_positions, d]
  std::vector<nn::EncoderLayerParams> layers;
  // Stage-1 classification head; retained in checkpoints, unused by Stage 2.
  nn::TensorPtr cls_w;  // [d, u]
  nn::TensorPtr cls_b;  // [u]

  void init(const BackboneConfig& cfg, Rng& rng);
  std::vector<nn::NamedParam> params() const;
};

struct BackboneForward {
  nn::TensorPtr logits;                 // [1, u]
  nn::TensorPtr pooled;                 // [1, d], final layer
  std::vector<nn::TensorPtr> captured;  // l pooled rows [1, d], deepest last
};

// One chunk forward. In bidirectional mode a CLS position is prepended and
// pooled; causal mode applies the causal mask and pools the last real token.
BackboneForward backbone_forward(const BackboneModel& m,
                                 const std::vector<int>& token_ids,
                                 const std::vector<uint8_t>& pad_mask,
                                 bool capture_layers);

struct Stage1TrainConfig {
  size_t epochs = 4;
  float lr = 3e-4f;
  nn::AdamConfig adam;  // lr field overridden by `lr`
  LossWiring wiring = LossWiring::conventional;
  uint64_t seed = 1;
  size_t log_every = 0;  // docs between progress lines; 0 = quiet
};

struct EpochRecord {
  size_t epoch = 0;        // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // chunk-level
};

struct Stage1Result {
  std::vector<EpochRecord> history;
  size_t best_epoch = 0;  // 1-based; earliest epoch wins ties
};

// Eq.-1 fine-tuning: each optimizer step consumes one document's chunk batch,
// every chunk labeled with the document's gold labels. Keeps the best
// validation-accuracy parameters. Throws on non-finite loss (epoch/step named).
Stage1Result finetune_stage1(BackboneModel& m,
                             const std::vector<chunker::ChunkSet>& train,
                             const std::vector<chunker::ChunkSet>& val,
                             const corpus::CorpusTask& task,
                             const Stage1TrainConfig& tc);

// Chunk-level predictions on frozen parameters (no gradients), parallel over
// documents. Returns one predicted label encoding per (doc, chunk) in order.
std::vector<std::vector<int>> predict_chunks(const BackboneModel& m,
                                             const chunker::ChunkSet& cs,
                                             const corpus::CorpusTask& task);

double chunk_level_accuracy(const BackboneModel& m,
                            const std::vector<chunker::ChunkSet>& docs,
                            const corpus::CorpusTask& task, size_t workers = 1);

}  // namespace mesc::backbone
