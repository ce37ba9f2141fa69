#include "mesc/head/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "mesc/parallel.hpp"
#include "mesc/structure/structure_model.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::head {

std::vector<eval::PredictionRecord> head_predict_records(
    const HeadModel& model, const std::vector<HeadExample>& examples,
    const corpus::CorpusTask& task) {
  nn::NoGradGuard guard;
  std::vector<eval::PredictionRecord> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto out =
        head_forward(model, ex.combined, ex.n_chunks,
                     ex.histogram.empty() ? nullptr : &ex.histogram, 0);
    eval::PredictionRecord rec;
    rec.doc_id = ex.doc_id;
    rec.gold = ex.gold;
    rec.logits = out.logits->values;
    rec.predicted =
        predict_labels(rec.logits.data(), out.logits->cols(), task);
    records.push_back(std::move(rec));
  }
  return records;
}

namespace {

struct SplitIds {
  std::vector<std::string> train, val, test;
};

SplitIds split_ids(const corpus::Corpus& corpus) {
  SplitIds ids;
  for (const auto* doc : corpus.split_docs("train")) ids.train.push_back(doc->id);
  for (const auto* doc : corpus.split_docs("val")) ids.val.push_back(doc->id);
  for (const auto* doc : corpus.split_docs("test")) ids.test.push_back(doc->id);
  return ids;
}

// Per-p shared artifacts: structure fit on the training chunks and histograms
// for every document in the corpus.
struct StructureSet {
  size_t bins = 0;  // K + 1
  std::map<std::string, structure::StructureLabels> by_doc;

  std::unordered_map<std::string, const structure::StructureLabels*> view() const {
    std::unordered_map<std::string, const structure::StructureLabels*> m;
    for (const auto& [id, labels] : by_doc) m.emplace(id, &labels);
    return m;
  }
};

StructureSet fit_structure_for_p(const backbone::EmbeddingStore& store,
                                 const SplitIds& ids, const AblationConfig& cfg,
                                 size_t p) {
  const size_t width =
      cfg.base.combine == CombineMode::concat ? p * store.d : store.d;

  std::vector<float> train_rows;
  size_t n_rows = 0;
  for (const auto& id : ids.train) {
    const auto* rec = store.find(id);
    if (rec == nullptr)
      throw std::invalid_argument("ablation_grid: doc not in store: " + id);
    const auto combined = combine_layers(*rec, store.l, store.d, p, cfg.base.combine);
    train_rows.insert(train_rows.end(), combined.begin(), combined.end());
    n_rows += rec->n_chunks;
  }

  const auto model = structure::fit_structure(train_rows, n_rows, width,
                                              cfg.reduction_dim,
                                              cfg.min_cluster_size, cfg.min_samples);
  StructureSet set;
  set.bins = model.cluster.num_clusters + 1;
  auto label_split = [&](const std::vector<std::string>& split) {
    for (const auto& id : split) {
      const auto* rec = store.find(id);
      if (rec == nullptr)
        throw std::invalid_argument("ablation_grid: doc not in store: " + id);
      const auto combined =
          combine_layers(*rec, store.l, store.d, p, cfg.base.combine);
      set.by_doc.emplace(id, structure::assign_labels(model, id, combined,
                                                      rec->n_chunks,
                                                      cfg.assign_tolerance));
    }
  };
  label_split(ids.train);
  label_split(ids.val);
  label_split(ids.test);
  return set;
}

struct Cell {
  size_t p = 0, t = 0;
  bool use_structure = false;
  uint64_t seed = 0;
};

void append_metric_rows(std::vector<AblationRow>& rows, const AblationConfig& cfg,
                        const Cell& cell, const std::string& seed_text,
                        const std::string& split, const eval::MetricReport& report) {
  AblationRow base;
  base.backbone = cfg.backbone_name;
  base.p = cell.p;
  base.t = cell.t;
  base.use_structure = cell.use_structure;
  base.seed = seed_text;
  base.split = split;
  base.metric = "accuracy";
  base.value = report.accuracy;
  rows.push_back(base);
  base.metric = "micro_f1";
  base.value = report.micro_f1;
  rows.push_back(base);
  base.metric = "macro_f1";
  base.value = report.macro_f1;
  rows.push_back(base);
}

}  // namespace

std::vector<AblationRow> ablation_grid(const backbone::EmbeddingStore& store,
                                       const corpus::Corpus& corpus,
                                       const AblationConfig& cfg) {
  if (cfg.base.d != store.d)
    throw std::invalid_argument("ablation_grid: config d != store d");
  if (cfg.ps.empty() || cfg.ts.empty() || cfg.structure_opts.empty() ||
      cfg.seeds.empty())
    throw std::invalid_argument("ablation_grid: empty grid axis");
  const auto ids = split_ids(corpus);
  if (ids.train.empty()) throw std::invalid_argument("ablation_grid: no train docs");

  const bool needs_structure =
      std::find(cfg.structure_opts.begin(), cfg.structure_opts.end(), true) !=
      cfg.structure_opts.end();

  // Shared per-p work, done once up front.
  std::map<size_t, StructureSet> structures;
  if (needs_structure)
    for (size_t p : cfg.ps) structures.emplace(p, fit_structure_for_p(store, ids, cfg, p));

  std::vector<Cell> cells;
  for (size_t p : cfg.ps)
    for (size_t t : cfg.ts)
      for (bool s : cfg.structure_opts)
        for (uint64_t seed : cfg.seeds) cells.push_back({p, t, s, seed});

  std::vector<std::vector<AblationRow>> cell_rows(cells.size());
  parallel_for(cells.size(), cfg.workers, [&](size_t begin, size_t end) {
    for (size_t ci = begin; ci < end; ++ci) {
      const Cell& cell = cells[ci];
      HeadConfig hcfg = cfg.base;
      hcfg.p = cell.p;
      hcfg.t = cell.t;
      hcfg.use_structure = cell.use_structure;
      hcfg.num_structure_bins = cell.use_structure ? structures.at(cell.p).bins : 0;
      hcfg.num_outputs = corpus.task.logit_width();
      hcfg.validate(store.l);

      std::unordered_map<std::string, const structure::StructureLabels*> view;
      if (cell.use_structure) view = structures.at(cell.p).view();
      const auto* structs = cell.use_structure ? &view : nullptr;

      const auto train = make_head_examples(store, ids.train, structs, hcfg);
      const auto val = make_head_examples(store, ids.val, structs, hcfg);
      const auto test = make_head_examples(store, ids.test, structs, hcfg);

      HeadTrainConfig tcfg = cfg.train;
      tcfg.seed = cell.seed;
      const auto result =
          train_head(train, val, hcfg, corpus.task, cfg.wiring, tcfg);

      const std::string seed_text = std::to_string(cell.seed);
      auto& rows = cell_rows[ci];
      if (!val.empty()) {
        const auto report = eval::compute_metrics(
            head_predict_records(result.model, val, corpus.task), corpus.task);
        append_metric_rows(rows, cfg, cell, seed_text, "val", report);
      }
      if (!test.empty()) {
        const auto report = eval::compute_metrics(
            head_predict_records(result.model, test, corpus.task), corpus.task);
        append_metric_rows(rows, cfg, cell, seed_text, "test", report);
      }
    }
  });

  std::vector<AblationRow> rows;
  for (const auto& cr : cell_rows) rows.insert(rows.end(), cr.begin(), cr.end());

  // Mean/std aggregates over seeds, per cell-axis x split x metric.
  std::vector<AblationRow> aggregates;
  for (size_t p : cfg.ps)
    for (size_t t : cfg.ts)
      for (bool s : cfg.structure_opts)
        for (const char* split : {"val", "test"})
          for (const char* metric : {"accuracy", "micro_f1", "macro_f1"}) {
            std::vector<double> values;
            for (const auto& row : rows)
              if (row.p == p && row.t == t && row.use_structure == s &&
                  row.split == split && row.metric == metric)
                values.push_back(row.value);
            if (values.empty()) continue;
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            const double stddev =
                values.size() > 1
                    ? std::sqrt(var / static_cast<double>(values.size() - 1))
                    : 0.0;
            AblationRow agg;
            agg.backbone = cfg.backbone_name;
            agg.p = p;
            agg.t = t;
            agg.use_structure = s;
            agg.split = split;
            agg.metric = metric;
            agg.seed = "mean";
            agg.value = mean;
            aggregates.push_back(agg);
            agg.seed = "std";
            agg.value = stddev;
            aggregates.push_back(agg);
          }
  rows.insert(rows.end(), aggregates.begin(), aggregates.end());
  return rows;
}

void save_ablation_csv(const std::vector<AblationRow>& rows,
                       const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write ablation csv: " + path);
  os << "backbone,p,t,use_structure,seed,split,metric,value\n";
  for (const auto& row : rows)
    os << row.backbone << ',' << row.p << ',' << row.t << ','
       << (row.use_structure ? 1 : 0) << ',' << row.seed << ',' << row.split << ','
       << row.metric << ',' << row.value << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace mesc::head
