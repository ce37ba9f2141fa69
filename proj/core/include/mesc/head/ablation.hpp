#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mesc/backbone/embedding_store.hpp"
#include "mesc/corpus/document.hpp"
#include "mesc/eval/metrics.hpp"
#include "mesc/head/head.hpp"

namespace mesc::head {

struct AblationConfig {
  std::string backbone_name = "mini";
  std::vector<size_t> ps{1, 2, 4};
  std::vector<size_t> ts{1, 2, 3};
  std::vector<bool> structure_opts{false, true};
  std::vector<uint64_t> seeds{1, 2, 3};

  // Structure fitting, applied once per p on the training chunks.
  size_t reduction_dim = 64;
  size_t min_cluster_size = 15;
  size_t min_samples = 15;
  double assign_tolerance = 1.0;

  HeadConfig base;        // d, heads, widths, max_chunks, combine, activation
  HeadTrainConfig train;  // seed field is replaced by the cell seed
  LossWiring wiring = LossWiring::conventional;
  size_t workers = 1;
};

struct AblationRow {
  std::string backbone;
  size_t p = 0;
  size_t t = 0;
  bool use_structure = false;
  std::string seed;    // literal seed, or "mean" / "std" aggregate rows
  std::string split;   // "val" | "test"
  std::string metric;  // "accuracy" | "micro_f1" | "macro_f1"
  double value = 0.0;
};

// Converts head predictions on the examples into scoreable records.
std::vector<eval::PredictionRecord> head_predict_records(
    const HeadModel& model, const std::vector<HeadExample>& examples,
    const corpus::CorpusTask& task);

// Full grid over p x t x +-structure x seeds. The embedding store is shared by
// every cell; layer combination and structure fitting happen once per p. Rows
// carry per-seed values plus mean/std aggregates per cell, split and metric.
std::vector<AblationRow> ablation_grid(const backbone::EmbeddingStore& store,
                                       const corpus::Corpus& corpus,
                                       const AblationConfig& cfg);

// CSV: backbone,p,t,use_structure,seed,split,metric,value
void save_ablation_csv(const std::vector<AblationRow>& rows,
                       const std::string& path);

}  // namespace mesc::head
