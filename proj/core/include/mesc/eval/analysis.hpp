#pragma once

#include <string>
#include <vector>

#include "mesc/corpus/document.hpp"

namespace mesc::eval {

// Inputs for the chunk-position study: per-chunk backbone logits plus the
// whole-document pipeline logits for the same document.
struct PerChunkDoc {
  std::string doc_id;
  std::vector<int> gold;
  size_t n_chunks = 0;
  std::vector<float> chunk_logits;     // n_chunks x u, row n = n-th chunk only
  std::vector<float> pipeline_logits;  // u
};

struct PerChunkPoint {
  size_t min_chunks = 0;  // document filter m
  size_t eval_chunk = 0;  // 1-based chunk position; 0 = whole-document pipeline
  double micro_f1 = 0.0;
  std::string source;  // "backbone" or "pipeline"
};

// For each filter m keeps documents with >= m chunks, scores the backbone on
// the n-th chunk alone for n = 1..m, and scores the pipeline once on the same
// subset. Filters nobody passes emit a stderr warning and no points.
std::vector<PerChunkPoint> per_chunk_analysis(const std::vector<PerChunkDoc>& docs,
                                              const corpus::CorpusTask& task,
                                              const std::vector<size_t>& filters);

// CSV: min_chunks,eval_chunk,micro_f1,source
void save_analysis_csv(const std::vector<PerChunkPoint>& points,
                       const std::string& path);

}  // namespace mesc::eval
