#pragma once

#include <string>
#include <vector>

#include "mesc/corpus/document.hpp"

#include "json.hpp"

namespace mesc::eval {

struct PredictionRecord {
  std::string doc_id;
  std::vector<int> gold;       // task label encoding (see corpus::Document)
  std::vector<int> predicted;  // same encoding
  std::vector<float> logits;   // optional, validated finite when present
  int chunk_index = -1;        // chunk used for the prediction, -1 = whole doc
};

struct ClassMetrics {
  size_t tp = 0, fp = 0, fn = 0;
  size_t support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricReport {
  double accuracy = 0.0;  // exact match over the full label encoding
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;  // one-vs-rest, indexed by class
};

// One-vs-rest confusion counting. Zero-denominator precision/recall/F1 are 0;
// zero-support classes still count toward the macro average. Multi-label
// predictions are indicator sets; binary is scored over both classes.
MetricReport compute_metrics(const std::vector<PredictionRecord>& records,
                             const corpus::CorpusTask& task);

nlohmann::ordered_json metrics_to_json(const MetricReport& report,
                                       const corpus::CorpusTask& task);

}  // namespace mesc::eval
