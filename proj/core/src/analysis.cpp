#include "mesc/eval/analysis.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mesc/eval/metrics.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::eval {

std::vector<PerChunkPoint> per_chunk_analysis(const std::vector<PerChunkDoc>& docs,
                                              const corpus::CorpusTask& task,
                                              const std::vector<size_t>& filters) {
  const size_t u = task.logit_width();
  for (const auto& doc : docs) {
    if (doc.chunk_logits.size() != doc.n_chunks * u)
      throw std::invalid_argument("per_chunk_analysis: chunk logits mismatch for " +
                                  doc.doc_id);
    if (doc.pipeline_logits.size() != u)
      throw std::invalid_argument(
          "per_chunk_analysis: pipeline logits mismatch for " + doc.doc_id);
  }

  std::vector<PerChunkPoint> points;
  for (size_t m : filters) {
    if (m == 0) throw std::invalid_argument("per_chunk_analysis: filter must be >= 1");
    std::vector<const PerChunkDoc*> kept;
    for (const auto& doc : docs)
      if (doc.n_chunks >= m) kept.push_back(&doc);
    if (kept.empty()) {
      std::fprintf(stderr,
                   "[per_chunk_analysis] warning: no documents with >= %zu "
                   "chunks, curve skipped\n",
                   m);
      continue;
    }

    for (size_t n = 1; n <= m; ++n) {
      std::vector<PredictionRecord> records;
      records.reserve(kept.size());
      for (const auto* doc : kept) {
        PredictionRecord rec;
        rec.doc_id = doc->doc_id;
        rec.gold = doc->gold;
        rec.chunk_index = static_cast<int>(n - 1);
        const float* row = doc->chunk_logits.data() + (n - 1) * u;
        rec.logits.assign(row, row + u);
        rec.predicted = predict_labels(row, u, task);
        records.push_back(std::move(rec));
      }
      points.push_back({m, n, compute_metrics(records, task).micro_f1, "backbone"});
    }

    std::vector<PredictionRecord> records;
    records.reserve(kept.size());
    for (const auto* doc : kept) {
      PredictionRecord rec;
      rec.doc_id = doc->doc_id;
      rec.gold = doc->gold;
      rec.logits = doc->pipeline_logits;
      rec.predicted = predict_labels(doc->pipeline_logits.data(), u, task);
      records.push_back(std::move(rec));
    }
    points.push_back({m, 0, compute_metrics(records, task).micro_f1, "pipeline"});
  }
  return points;
}

void save_analysis_csv(const std::vector<PerChunkPoint>& points,
                       const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write analysis csv: " + path);
  os << "min_chunks,eval_chunk,micro_f1,source\n";
  for (const auto& p : points)
    os << p.min_chunks << ',' << p.eval_chunk << ',' << p.micro_f1 << ','
       << p.source << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace mesc::eval
