#include "mesc/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace mesc::eval {

namespace {

// Class-indicator view of a label encoding: binary and multi-class mark one
// class, multi-label marks every listed label.
std::vector<uint8_t> indicators(const std::vector<int>& labels,
                                const corpus::CorpusTask& task) {
  const size_t classes = task.num_labels;
  std::vector<uint8_t> on(classes, 0);
  if (task.kind == corpus::TaskKind::multi_label) {
    for (int l : labels) {
      if (l < 0 || l >= static_cast<int>(classes))
        throw std::invalid_argument("compute_metrics: label out of range");
      on[static_cast<size_t>(l)] = 1;
    }
    return on;
  }
  if (labels.size() != 1)
    throw std::invalid_argument("compute_metrics: expected exactly one label");
  const int l = labels[0];
  if (l < 0 || l >= static_cast<int>(classes))
    throw std::invalid_argument("compute_metrics: label out of range");
  on[static_cast<size_t>(l)] = 1;
  return on;
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_of(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

}  // namespace

MetricReport compute_metrics(const std::vector<PredictionRecord>& records,
                             const corpus::CorpusTask& task) {
  if (records.empty())
    throw std::invalid_argument("compute_metrics: no prediction records");
  const size_t classes = task.num_labels;

  MetricReport report;
  report.per_class.resize(classes);
  size_t exact = 0;
  for (const auto& rec : records) {
    for (float v : rec.logits)
      if (!std::isfinite(v))
        throw std::invalid_argument("compute_metrics: non-finite logit for doc " +
                                    rec.doc_id);
    const auto gold = indicators(rec.gold, task);
    const auto pred = indicators(rec.predicted, task);
    if (gold == pred) ++exact;
    for (size_t c = 0; c < classes; ++c) {
      auto& m = report.per_class[c];
      m.support += gold[c];
      if (gold[c] && pred[c]) ++m.tp;
      if (!gold[c] && pred[c]) ++m.fp;
      if (gold[c] && !pred[c]) ++m.fn;
    }
  }

  size_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  for (auto& m : report.per_class) {
    m.precision = safe_div(static_cast<double>(m.tp),
                           static_cast<double>(m.tp + m.fp));
    m.recall =
        safe_div(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
    m.f1 = f1_of(m.precision, m.recall);
    macro_sum += m.f1;
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }

  report.accuracy = static_cast<double>(exact) / static_cast<double>(records.size());
  report.macro_f1 = macro_sum / static_cast<double>(classes);
  const double micro_p = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  const double micro_r = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  report.micro_f1 = f1_of(micro_p, micro_r);
  return report;
}

nlohmann::ordered_json metrics_to_json(const MetricReport& report,
                                       const corpus::CorpusTask& task) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["micro_f1"] = report.micro_f1;
  j["macro_f1"] = report.macro_f1;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    nlohmann::ordered_json e;
    e["class"] = c < task.label_names.size() ? task.label_names[c]
                                             : std::to_string(c);
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["support"] = m.support;
    classes.push_back(e);
  }
  j["per_class"] = classes;
  return j;
}

}  // namespace mesc::eval
