#pragma once

// Reference metrics computed straight from the definitions: expand every
// record to explicit per-class indicator vectors, enumerate the full confusion
// table per class, then average.

#include <cstddef>
#include <vector>

#include "mesc/corpus/document.hpp"
#include "mesc/eval/metrics.hpp"

namespace mesc::test {

struct OracleMetrics {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

inline std::vector<int> to_indicator(const std::vector<int>& enc,
                                     const corpus::CorpusTask& task) {
  std::vector<int> ind(task.num_labels, 0);
  if (task.kind == corpus::TaskKind::multi_label) {
    for (size_t c = 0; c < task.num_labels; ++c) ind[c] = enc[c] != 0;
  } else {
    ind[static_cast<size_t>(enc[0])] = 1;
  }
  return ind;
}

inline OracleMetrics metrics_oracle(const std::vector<eval::PredictionRecord>& recs,
                                    const corpus::CorpusTask& task) {
  const size_t k = task.num_labels;
  std::vector<std::vector<int>> gold, pred;
  for (const auto& r : recs) {
    gold.push_back(to_indicator(r.gold, task));
    pred.push_back(to_indicator(r.predicted, task));
  }

  OracleMetrics out;
  size_t exact = 0;
  for (size_t i = 0; i < recs.size(); ++i)
    if (gold[i] == pred[i]) ++exact;
  out.accuracy = recs.empty() ? 0.0 : static_cast<double>(exact) / recs.size();

  size_t tp_all = 0, fp_all = 0, fn_all = 0;
  double f1_sum = 0.0;
  for (size_t c = 0; c < k; ++c) {
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < recs.size(); ++i) {
      if (gold[i][c] == 1 && pred[i][c] == 1) ++tp;
      if (gold[i][c] == 0 && pred[i][c] == 1) ++fp;
      if (gold[i][c] == 1 && pred[i][c] == 0) ++fn;
    }
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    const double f1 = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    out.per_class_f1.push_back(f1);
    f1_sum += f1;
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
  }
  out.macro_f1 = k == 0 ? 0.0 : f1_sum / static_cast<double>(k);
  const double mp =
      tp_all + fp_all == 0 ? 0.0 : static_cast<double>(tp_all) / (tp_all + fp_all);
  const double mr =
      tp_all + fn_all == 0 ? 0.0 : static_cast<double>(tp_all) / (tp_all + fn_all);
  out.micro_f1 = mp + mr == 0.0 ? 0.0 : 2.0 * mp * mr / (mp + mr);
  return out;
}

}  // namespace mesc::test
