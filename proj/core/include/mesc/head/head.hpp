#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mesc/backbone/embedding_store.hpp"
#include "mesc/corpus/document.hpp"
#include "mesc/nn/adam.hpp"
#include "mesc/nn/encoder.hpp"
#include "mesc/rng.hpp"
#include "mesc/structure/structure_model.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::head {

enum class CombineMode { concat, elementwise_add };

std::string combine_mode_name(CombineMode m);
CombineMode combine_mode_from_name(const std::string& name);

// Inter-chunk classifier head over stored backbone embeddings. d is the
// backbone hidden width; the head operates at d_f = p*d (concat) or d (add).
struct HeadConfig {
  size_t p = 1;  // how many stored layers are combined per chunk
  size_t t = 2;  // inter-chunk encoder layers; 0 = pooling-only testing mode
  size_t heads = 8;
  size_t d = 0;
  size_t ffn_t_width = 128;
  size_t ffn_i_width = 32;
  bool use_structure = false;
  size_t num_structure_bins = 0;  // K+1 histogram bins when use_structure
  size_t max_chunks = 64;         // longer documents keep their last chunks
  CombineMode combine = CombineMode::concat;
  bool ffn_i_gelu = false;  // default keeps the softmax hidden activation
  size_t num_outputs = 0;   // u

  size_t d_f() const { return combine == CombineMode::concat ? p * d : d; }
  // l = number of stored layers per chunk in the embedding store.
  void validate(size_t l) const;
};

struct HeadModel {
  HeadConfig config;
  nn::TensorPtr pos;  // [max_chunks, d_f] learned chunk positions
  std::vector<nn::EncoderLayerParams> layers;
  nn::TensorPtr ffn_t_w, ffn_t_b;  // d_f -> ffn_t_width
  nn::TensorPtr ffn_i_w, ffn_i_b;  // ffn_t_width [+ bins] -> ffn_i_width
  nn::TensorPtr ffn_e_w, ffn_e_b;  // ffn_i_width -> u

  void init(const HeadConfig& cfg, Rng& rng);
  std::vector<nn::NamedParam> params();
};

struct HeadOutput {
  nn::TensorPtr logits;  // [1, u]
  nn::TensorPtr pooled;  // G, [1, ffn_t_width]
};

// Per-chunk combination of the last p stored layers (deepest first when
// concatenating). Returns [n_chunks x d_f] row-major.
std::vector<float> combine_layers(const backbone::EmbeddingStore::DocRecord& doc,
                                  size_t l, size_t d, size_t p, CombineMode mode);

// Runs the head on one document's combined rows. histogram must be non-null
// iff the config uses structure. pad_to > n_chunks appends masked pad rows
// (used when batching by similar length); padding never changes the logits.
HeadOutput head_forward(const HeadModel& model, const std::vector<float>& combined,
                        size_t n_chunks, const std::vector<float>* histogram,
                        size_t pad_to = 0);

struct HeadExample {
  std::string doc_id;
  size_t n_chunks = 0;
  std::vector<float> combined;   // n_chunks x d_f
  std::vector<float> histogram;  // K+1 bins; empty when structure is unused
  std::vector<int> gold;
};

// Assembles training examples for the given ids from the Stage-2 store,
// attaching structure histograms when the config asks for them.
std::vector<HeadExample> make_head_examples(
    const backbone::EmbeddingStore& store, const std::vector<std::string>& ids,
    const std::unordered_map<std::string, const structure::StructureLabels*>*
        structures,
    const HeadConfig& cfg);

struct HeadTrainConfig {
  size_t epochs = 5;
  float lr = 3e-4f;
  size_t batch_size = 8;
  uint64_t seed = 1;
};

struct HeadEpochStats {
  size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct HeadEvalStats {
  double loss = 0.0;
  double accuracy = 0.0;  // exact-match over the task's label encoding
};

struct HeadTrainResult {
  HeadModel model;  // best-epoch parameters
  std::vector<HeadEpochStats> history;
  int best_epoch = -1;  // -1 when epochs == 0
  HeadEvalStats final_eval;  // on val, or on train when no val docs exist
};

HeadEvalStats evaluate_head(const HeadModel& model,
                            const std::vector<HeadExample>& examples,
                            const corpus::CorpusTask& task, LossWiring wiring);

// Epochs of per-batch Adam steps over documents bucketed by similar chunk
// count; keeps the best-validation parameters (accuracy, then loss, then
// earliest epoch). epochs = 0 returns the randomly initialized model.
HeadTrainResult train_head(const std::vector<HeadExample>& train,
                           const std::vector<HeadExample>& val,
                           const HeadConfig& cfg, const corpus::CorpusTask& task,
                           LossWiring wiring, const HeadTrainConfig& tcfg);

}  // namespace mesc::head
