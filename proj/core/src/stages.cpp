#include "mesc/pipeline/stages.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "mesc/backbone/backbone.hpp"
#include "mesc/backbone/embedding_store.hpp"
#include "mesc/chunker/chunker.hpp"
#include "mesc/corpus/document.hpp"
#include "mesc/corpus/synthetic.hpp"
#include "mesc/corpus/vocab.hpp"
#include "mesc/eval/analysis.hpp"
#include "mesc/eval/metrics.hpp"
#include "mesc/eval/ttest.hpp"
#include "mesc/head/ablation.hpp"
#include "mesc/head/head.hpp"
#include "mesc/nn/checkpoint.hpp"
#include "mesc/nn/tensor.hpp"
#include "mesc/parallel.hpp"
#include "mesc/pipeline/manifest.hpp"
#include "mesc/rng.hpp"
#include "mesc/structure/cluster_score.hpp"
#include "mesc/structure/structure_model.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kCorpusFile = "corpus.jsonl";
constexpr const char* kSpansFile = "spans.jsonl";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kHistogramFile = "chunk_histogram.csv";
constexpr const char* kSnapshotFile = "config_snapshot.txt";
constexpr const char* kBackboneCkpt = "backbone.ckpt";
constexpr const char* kStage1History = "stage1_history.json";
constexpr const char* kStoreFile = "embeddings.bin";
constexpr const char* kClusterFile = "cluster_model.bin";
constexpr const char* kStructureCsv = "structure_labels.csv";
constexpr const char* kStructureQuality = "structure_quality.json";
constexpr const char* kHeadCkpt = "head.ckpt";
constexpr const char* kHeadHistory = "head_history.json";
constexpr const char* kMetricsFile = "metrics.json";
constexpr const char* kPerChunkCsv = "per_chunk.csv";
constexpr const char* kAblationCsv = "ablation.csv";

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + cfg.out_dir +
                             ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_json(const std::string& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_snapshot(const RunConfig& cfg) {
  write_text(join(cfg.out_dir, kSnapshotFile), dump_config(cfg));
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

corpus::Corpus load_run_corpus(const RunConfig& cfg) {
  return corpus::load_corpus(join(cfg.out_dir, kCorpusFile), cfg.task);
}

// Tokenized + chunked view of the prepared corpus; entries follow corpus
// document order across all splits.
struct Prepared {
  corpus::Corpus corpus;
  corpus::Vocabulary vocab;
  std::vector<corpus::TokenSequence> tokens;
  std::vector<chunker::ChunkSet> chunks;
};

Prepared load_prepared(const RunConfig& cfg) {
  Prepared p;
  p.corpus = load_run_corpus(cfg);
  p.vocab = corpus::load_vocab(join(cfg.out_dir, kVocabFile));
  p.tokens.reserve(p.corpus.docs.size());
  p.chunks.reserve(p.corpus.docs.size());
  for (const auto& doc : p.corpus.docs) {
    p.tokens.push_back(corpus::tokenize(doc, p.vocab));
    p.chunks.push_back(chunker::chunk(p.tokens.back(), doc.labels, cfg.chunk));
  }
  return p;
}

std::vector<chunker::ChunkSet> chunks_of_split(const Prepared& p,
                                               const std::string& split) {
  std::vector<chunker::ChunkSet> out;
  for (size_t i = 0; i < p.corpus.docs.size(); ++i)
    if (p.corpus.docs[i].split == split) out.push_back(p.chunks[i]);
  return out;
}

std::vector<std::string> split_ids(const corpus::Corpus& c,
                                   const std::string& split) {
  std::vector<std::string> out;
  for (const auto* d : c.split_docs(split)) out.push_back(d->id);
  return out;
}

backbone::BackboneConfig backbone_config_for(const RunConfig& cfg,
                                             size_t vocab_size) {
  auto bc = cfg.backbone;
  bc.vocab_size = vocab_size;
  bc.logit_width = cfg.task.logit_width();
  bc.max_positions = cfg.chunk.width + 1;
  return bc;
}

backbone::BackboneModel load_backbone(const RunConfig& cfg, size_t vocab_size) {
  backbone::BackboneModel m;
  Rng rng(0);
  m.init(backbone_config_for(cfg, vocab_size), rng);
  nn::load_checkpoint_into(join(cfg.out_dir, kBackboneCkpt), m.params());
  return m;
}

// Head configuration with the run-derived widths filled in. num_structure_bins
// is K+1 from the fitted cluster model (0 when structure is unused).
head::HeadConfig head_config_for(const RunConfig& cfg,
                                 const backbone::EmbeddingStore& store,
                                 size_t num_structure_bins) {
  auto hc = cfg.head;
  hc.d = store.d;
  hc.num_outputs = cfg.task.logit_width();
  hc.num_structure_bins = num_structure_bins;
  hc.validate(store.l);
  return hc;
}

// Structure labels reloaded from the Stage-3 artifacts, with per-document
// histograms rebuilt at the fitted cluster count.
struct StructureData {
  size_t num_clusters = 0;
  std::vector<structure::StructureLabels> docs;
  std::unordered_map<std::string, const structure::StructureLabels*> by_doc;
};

StructureData load_structure_data(const RunConfig& cfg) {
  StructureData sd;
  const auto model =
      structure::load_structure_model(join(cfg.out_dir, kClusterFile));
  sd.num_clusters = model.cluster.num_clusters;
  auto rows = structure::load_structure_csv(join(cfg.out_dir, kStructureCsv));
  sd.docs.reserve(rows.size());
  for (auto& [id, labels] : rows) {
    structure::StructureLabels sl;
    sl.doc_id = id;
    sl.histogram = structure::label_histogram(labels, sd.num_clusters);
    sl.labels = std::move(labels);
    sd.docs.push_back(std::move(sl));
  }
  for (const auto& sl : sd.docs) sd.by_doc.emplace(sl.doc_id, &sl);
  return sd;
}

head::HeadModel load_head(const RunConfig& cfg, const head::HeadConfig& hc) {
  head::HeadModel m;
  Rng rng(0);
  m.init(hc, rng);
  nn::load_checkpoint_into(join(cfg.out_dir, kHeadCkpt), m.params());
  return m;
}

// Stage-3 / train-head prerequisites shared by eval and analysis: the store,
// the filled head config, and structure labels when the run uses them.
struct HeadSetup {
  backbone::EmbeddingStore store;
  StructureData structure;
  head::HeadConfig config;
  head::HeadModel model;
};

HeadSetup load_head_setup(const RunConfig& cfg) {
  HeadSetup hs;
  hs.store = backbone::load_store(join(cfg.out_dir, kStoreFile));
  size_t bins = 0;
  if (cfg.head.use_structure) {
    hs.structure = load_structure_data(cfg);
    bins = hs.structure.num_clusters + 1;
  }
  hs.config = head_config_for(cfg, hs.store, bins);
  hs.model = load_head(cfg, hs.config);
  return hs;
}

const std::unordered_map<std::string, const structure::StructureLabels*>*
structure_view(const RunConfig& cfg, const HeadSetup& hs) {
  return cfg.head.use_structure ? &hs.structure.by_doc : nullptr;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

// Per-seed ablation values for one (p, t, split, metric) cell, split by the
// structure flag. Keyed so iteration order is stable for JSON output.
struct StructureContrast {
  std::vector<double> with_structure;
  std::vector<double> without_structure;
};

using ContrastKey = std::tuple<size_t, size_t, std::string, std::string>;

std::map<ContrastKey, StructureContrast> collect_contrasts(
    const std::vector<head::AblationRow>& rows) {
  std::map<ContrastKey, StructureContrast> out;
  for (const auto& row : rows) {
    if (!all_digits(row.seed)) continue;  // skip mean/std/p-value rows
    auto& cell = out[{row.p, row.t, row.split, row.metric}];
    (row.use_structure ? cell.with_structure : cell.without_structure)
        .push_back(row.value);
  }
  return out;
}

std::vector<head::AblationRow> parse_ablation_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read ablation csv: " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "backbone,p,t,use_structure,seed,split,metric,value")
    throw std::runtime_error("unexpected ablation csv header: " + path);
  std::vector<head::AblationRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<std::string, 8> fields;
    size_t field = 0, start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= fields.size())
          throw std::runtime_error("malformed ablation csv row: " + line);
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != fields.size())
      throw std::runtime_error("malformed ablation csv row: " + line);
    head::AblationRow row;
    row.backbone = fields[0];
    row.p = std::stoul(fields[1]);
    row.t = std::stoul(fields[2]);
    row.use_structure = fields[3] == "1" || fields[3] == "true";
    row.seed = fields[4];
    row.split = fields[5];
    row.metric = fields[6];
    row.value = std::stod(fields[7]);
    rows.push_back(std::move(row));
  }
  return rows;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

ordered_json significance_json(const std::vector<head::AblationRow>& rows,
                               eval::TTestKind kind) {
  auto out = ordered_json::array();
  for (const auto& [key, cell] : collect_contrasts(rows)) {
    if (cell.with_structure.size() < 2 || cell.without_structure.size() < 2)
      continue;
    const auto res =
        eval::significance_test(cell.with_structure, cell.without_structure, kind);
    ordered_json entry;
    entry["p"] = std::get<0>(key);
    entry["t"] = std::get<1>(key);
    entry["split"] = std::get<2>(key);
    entry["metric"] = std::get<3>(key);
    entry["mean_with_structure"] = mean_of(cell.with_structure);
    entry["mean_without_structure"] = mean_of(cell.without_structure);
    entry["t_stat"] = res.t;
    entry["df"] = res.df;
    entry["p_value"] = res.p;
    entry["significant"] = res.significant;
    entry["test"] = eval::ttest_kind_name(kind);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

void cmd_prepare(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);

  const uint64_t corpus_hash = prepare_corpus_hash(cfg);
  if (!stage_current(manifest, cfg.out_dir, "prepare_corpus", corpus_hash)) {
    std::map<std::string, std::string> artifacts;
    corpus::Corpus corp;
    if (cfg.corpus_path.empty()) {
      auto spec = cfg.synthetic;
      spec.task = cfg.task;
      spec.seed = derive_seed(cfg.seed, "synthetic");
      auto synth = corpus::generate_synthetic(spec);
      corp = std::move(synth.corpus);
      corpus::save_corpus(join(cfg.out_dir, kCorpusFile), corp);
      corpus::save_spans(join(cfg.out_dir, kSpansFile), synth.spans);
      artifacts["corpus"] = kCorpusFile;
      artifacts["spans"] = kSpansFile;
    } else {
      corp = corpus::load_corpus(cfg.corpus_path, cfg.task);
      corpus::save_corpus(join(cfg.out_dir, kCorpusFile), corp);
      artifacts["corpus"] = kCorpusFile;
    }
    const auto vocab = corpus::build_vocab(corp.split_docs("train"),
                                           cfg.vocab_max_size, cfg.vocab_min_freq);
    corpus::save_vocab(join(cfg.out_dir, kVocabFile), vocab);
    artifacts["vocab"] = kVocabFile;
    record_stage(manifest, cfg.out_dir, "prepare_corpus", corpus_hash, artifacts);

    const auto counts = corp.split_counts();
    std::cout << "prepare: corpus " << corp.docs.size() << " docs (";
    bool first = true;
    for (const auto& [split, n] : counts) {
      if (!first) std::cout << ", ";
      std::cout << split << " " << n;
      first = false;
    }
    std::cout << "), vocab " << vocab.size() << "\n";
  } else {
    std::cout << "prepare: corpus and vocab up to date\n";
  }

  const uint64_t chunks_hash = prepare_chunks_hash(cfg);
  if (!stage_current(manifest, cfg.out_dir, "prepare_chunks", chunks_hash)) {
    const auto corp = load_run_corpus(cfg);
    const auto vocab = corpus::load_vocab(join(cfg.out_dir, kVocabFile));
    std::vector<corpus::TokenSequence> tokens;
    tokens.reserve(corp.docs.size());
    for (const auto& doc : corp.docs) tokens.push_back(corpus::tokenize(doc, vocab));
    const auto hist = chunker::chunk_count_histogram(tokens, cfg.chunk);
    chunker::save_histogram_csv(join(cfg.out_dir, kHistogramFile), hist);
    record_stage(manifest, cfg.out_dir, "prepare_chunks", chunks_hash,
                 {{"chunk_histogram", kHistogramFile}});
    std::cout << "prepare: chunk histogram written, median " << hist.median
              << " chunks/doc\n";
  } else {
    std::cout << "prepare: chunk histogram up to date\n";
  }

  save_manifest(manifest, cfg.out_dir);
}

void cmd_stage1(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "prepare_chunks", prepare_chunks_hash(cfg));

  const auto prepared = load_prepared(cfg);
  const auto train = chunks_of_split(prepared, "train");
  const auto val = chunks_of_split(prepared, "val");
  if (train.empty()) throw ConfigError("fine-tune: the corpus has no train split");

  backbone::BackboneModel model;
  Rng init_rng(derive_seed(cfg.seed, "stage1_init"));
  model.init(backbone_config_for(cfg, prepared.vocab.size()), init_rng);

  backbone::Stage1TrainConfig tc;
  tc.epochs = cfg.stage1_epochs;
  tc.lr = cfg.stage1_lr;
  tc.wiring = cfg.wiring;
  tc.seed = derive_seed(cfg.seed, "stage1");
  const auto result = backbone::finetune_stage1(model, train, val, cfg.task, tc);

  nn::save_checkpoint(join(cfg.out_dir, kBackboneCkpt), model.params());
  ordered_json hist;
  hist["best_epoch"] = result.best_epoch;
  auto epochs = ordered_json::array();
  for (const auto& er : result.history) {
    ordered_json e;
    e["epoch"] = er.epoch;
    e["train_loss"] = er.train_loss;
    e["val_accuracy"] = er.val_accuracy;
    epochs.push_back(std::move(e));
  }
  hist["epochs"] = std::move(epochs);
  write_json(join(cfg.out_dir, kStage1History), hist);

  record_stage(manifest, cfg.out_dir, "stage1", stage1_hash(cfg),
               {{"backbone_checkpoint", kBackboneCkpt},
                {"stage1_history", kStage1History}});
  save_manifest(manifest, cfg.out_dir);

  std::cout << "stage1: " << result.history.size() << " epochs, best epoch "
            << result.best_epoch;
  if (!result.history.empty())
    std::cout << ", val chunk accuracy "
              << result.history[result.best_epoch - 1].val_accuracy;
  std::cout << "\n";
}

void cmd_stage2(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "prepare_chunks", prepare_chunks_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage1", stage1_hash(cfg));

  const auto prepared = load_prepared(cfg);
  const auto model = load_backbone(cfg, prepared.vocab.size());
  const auto store = backbone::extract_stage2(model, prepared.chunks, cfg.workers);
  backbone::save_store(join(cfg.out_dir, kStoreFile), store);

  record_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg),
               {{"embeddings", kStoreFile}});
  save_manifest(manifest, cfg.out_dir);

  size_t total_chunks = 0;
  for (const auto& doc : store.docs) total_chunks += doc.n_chunks;
  std::cout << "stage2: stored " << store.docs.size() << " docs, "
            << total_chunks << " chunks, " << store.l << " layers x " << store.d
            << " dims each\n";
}

void cmd_stage3(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "prepare_chunks", prepare_chunks_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg));

  const auto prepared = load_prepared(cfg);
  const auto store = backbone::load_store(join(cfg.out_dir, kStoreFile));
  if (cfg.head.p > store.l)
    throw ConfigError("head.p exceeds the stored layer count " +
                      std::to_string(store.l) + "; rerun stage2");
  const size_t d_f = cfg.head.combine == head::CombineMode::concat
                         ? cfg.head.p * store.d
                         : store.d;

  // Fit on the training chunks only.
  std::vector<float> train_rows;
  size_t n_train_chunks = 0;
  for (size_t i = 0; i < prepared.corpus.docs.size(); ++i) {
    if (prepared.corpus.docs[i].split != "train") continue;
    const auto* rec = store.find(prepared.corpus.docs[i].id);
    if (rec == nullptr)
      throw std::runtime_error("stage3: doc missing from store: " +
                               prepared.corpus.docs[i].id);
    const auto combined =
        head::combine_layers(*rec, store.l, store.d, cfg.head.p, cfg.head.combine);
    train_rows.insert(train_rows.end(), combined.begin(), combined.end());
    n_train_chunks += rec->n_chunks;
  }
  if (n_train_chunks == 0)
    throw ConfigError("structure fit: the corpus has no train split");

  const auto model = structure::fit_structure(
      train_rows, n_train_chunks, d_f, cfg.structure_r,
      cfg.structure_min_cluster_size, cfg.structure_min_samples);
  save_structure_model(model, join(cfg.out_dir, kClusterFile));

  // Label every document (all splits) with the fitted model.
  std::vector<structure::StructureLabels> labeled;
  labeled.reserve(store.docs.size());
  size_t n_noise = 0, n_chunks_total = 0;
  for (const auto& rec : store.docs) {
    const auto combined =
        head::combine_layers(rec, store.l, store.d, cfg.head.p, cfg.head.combine);
    auto sl = structure::assign_labels(model, rec.id, combined, rec.n_chunks,
                                       cfg.structure_tolerance);
    n_chunks_total += sl.labels.size();
    for (int lab : sl.labels)
      if (lab < 0) ++n_noise;
    labeled.push_back(std::move(sl));
  }
  save_structure_csv(labeled, join(cfg.out_dir, kStructureCsv));

  std::map<std::string, std::string> artifacts{
      {"cluster_model", kClusterFile}, {"structure_labels", kStructureCsv}};

  // When the corpus carries planted part spans, score the discovered labels
  // against them (per chunk window, majority generating part as truth).
  const std::string spans_path = join(cfg.out_dir, kSpansFile);
  if (fs::exists(spans_path)) {
    const auto spans = corpus::load_spans(spans_path);
    std::unordered_map<std::string, const structure::StructureLabels*> by_doc;
    for (const auto& sl : labeled) by_doc.emplace(sl.doc_id, &sl);

    auto score_split = [&](bool train_only) {
      std::vector<int> pred, truth;
      for (size_t i = 0; i < prepared.corpus.docs.size(); ++i) {
        const auto& doc = prepared.corpus.docs[i];
        if (train_only && doc.split != "train") continue;
        const auto span_it = spans.find(doc.id);
        const auto lab_it = by_doc.find(doc.id);
        if (span_it == spans.end() || lab_it == by_doc.end()) continue;
        const auto& chunks = prepared.chunks[i].chunks;
        const auto& labels = lab_it->second->labels;
        for (size_t c = 0; c < chunks.size() && c < labels.size(); ++c) {
          truth.push_back(corpus::majority_part(
              span_it->second, chunks[c].start,
              chunks[c].start + chunks[c].true_length));
          pred.push_back(labels[c]);
        }
      }
      return structure::score_clusters(pred, truth);
    };

    auto score_json = [](const structure::ClusterScore& s) {
      ordered_json j;
      j["ari_excl_noise"] = s.ari_excl_noise;
      j["ari_incl_noise"] = s.ari_incl_noise;
      j["purity_excl_noise"] = s.purity_excl_noise;
      j["purity_incl_noise"] = s.purity_incl_noise;
      j["n_total"] = s.n_total;
      j["n_noise"] = s.n_noise;
      return j;
    };

    const auto train_score = score_split(true);
    const auto all_score = score_split(false);
    ordered_json quality;
    quality["num_clusters"] = model.cluster.num_clusters;
    quality["train"] = score_json(train_score);
    quality["all"] = score_json(all_score);
    write_json(join(cfg.out_dir, kStructureQuality), quality);
    artifacts["structure_quality"] = kStructureQuality;
    std::cout << "stage3: " << model.cluster.num_clusters << " clusters, "
              << n_noise << "/" << n_chunks_total
              << " noise chunks, train ARI (excl noise) "
              << train_score.ari_excl_noise << "\n";
  } else {
    std::cout << "stage3: " << model.cluster.num_clusters << " clusters, "
              << n_noise << "/" << n_chunks_total << " noise chunks\n";
  }

  record_stage(manifest, cfg.out_dir, "stage3", stage3_hash(cfg), artifacts);
  save_manifest(manifest, cfg.out_dir);
}

void cmd_train_head(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg));
  if (cfg.head.use_structure)
    require_stage(manifest, cfg.out_dir, "stage3", stage3_hash(cfg));

  const auto corp = load_run_corpus(cfg);
  const auto store = backbone::load_store(join(cfg.out_dir, kStoreFile));
  StructureData structure;
  size_t bins = 0;
  if (cfg.head.use_structure) {
    structure = load_structure_data(cfg);
    bins = structure.num_clusters + 1;
  }
  const auto hc = head_config_for(cfg, store, bins);
  const auto* structures = cfg.head.use_structure ? &structure.by_doc : nullptr;

  const auto train_ids = split_ids(corp, "train");
  const auto val_ids = split_ids(corp, "val");
  if (train_ids.empty())
    throw ConfigError("train-head: the corpus has no train split");
  const auto train_ex = head::make_head_examples(store, train_ids, structures, hc);
  const auto val_ex = head::make_head_examples(store, val_ids, structures, hc);

  head::HeadTrainConfig tc;
  tc.epochs = cfg.head_epochs;
  tc.lr = cfg.head_lr;
  tc.batch_size = cfg.head_batch_size;
  tc.seed = derive_seed(cfg.seed, "head");
  auto result = head::train_head(train_ex, val_ex, hc, cfg.task, cfg.wiring, tc);

  nn::save_checkpoint(join(cfg.out_dir, kHeadCkpt), result.model.params());
  ordered_json hist;
  hist["best_epoch"] = result.best_epoch;
  auto epochs = ordered_json::array();
  for (const auto& es : result.history) {
    ordered_json e;
    e["epoch"] = es.epoch;
    e["train_loss"] = es.train_loss;
    e["val_loss"] = es.val_loss;
    e["val_accuracy"] = es.val_accuracy;
    epochs.push_back(std::move(e));
  }
  hist["epochs"] = std::move(epochs);
  ordered_json fin;
  fin["loss"] = result.final_eval.loss;
  fin["accuracy"] = result.final_eval.accuracy;
  hist["final_eval"] = std::move(fin);
  write_json(join(cfg.out_dir, kHeadHistory), hist);

  record_stage(manifest, cfg.out_dir, "train_head", train_head_hash(cfg),
               {{"head_checkpoint", kHeadCkpt}, {"head_history", kHeadHistory}});
  save_manifest(manifest, cfg.out_dir);

  std::cout << "train-head: best epoch " << result.best_epoch
            << ", eval accuracy " << result.final_eval.accuracy << ", loss "
            << result.final_eval.loss << "\n";
}

void cmd_eval(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg));
  if (cfg.head.use_structure)
    require_stage(manifest, cfg.out_dir, "stage3", stage3_hash(cfg));
  require_stage(manifest, cfg.out_dir, "train_head", train_head_hash(cfg));

  const auto corp = load_run_corpus(cfg);
  const auto hs = load_head_setup(cfg);

  ordered_json out;
  out["config_hash"] = hex64(config_hash(cfg));
  out["task"] = corpus::task_kind_name(cfg.task.kind);
  ordered_json splits;
  for (const std::string split : {"val", "test"}) {
    const auto ids = split_ids(corp, split);
    if (ids.empty()) {
      splits[split] = nullptr;
      continue;
    }
    const auto examples =
        head::make_head_examples(hs.store, ids, structure_view(cfg, hs), hs.config);
    const auto records =
        head::head_predict_records(hs.model, examples, cfg.task);
    const auto report = eval::compute_metrics(records, cfg.task);
    splits[split] = eval::metrics_to_json(report, cfg.task);
    std::cout << "eval " << split << ": accuracy "
              << report.accuracy << ", micro F1 " << report.micro_f1
              << ", macro F1 " << report.macro_f1 << "\n";
  }
  out["splits"] = std::move(splits);

  const std::string ablation_path = join(cfg.out_dir, kAblationCsv);
  if (fs::exists(ablation_path)) {
    out["significance"] =
        significance_json(parse_ablation_csv(ablation_path), cfg.ttest);
  } else {
    out["significance"] = ordered_json::array();
  }

  write_json(join(cfg.out_dir, kMetricsFile), out);
  record_stage(manifest, cfg.out_dir, "eval", train_head_hash(cfg),
               {{"metrics", kMetricsFile}});
  save_manifest(manifest, cfg.out_dir);
}

void cmd_ablate(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg));
  const bool any_structure =
      std::find(cfg.ablate_structure.begin(), cfg.ablate_structure.end(), true) !=
      cfg.ablate_structure.end();
  if (any_structure)
    require_stage(manifest, cfg.out_dir, "stage3", stage3_hash(cfg));

  const auto corp = load_run_corpus(cfg);
  const auto store = backbone::load_store(join(cfg.out_dir, kStoreFile));

  head::AblationConfig ac;
  ac.backbone_name = cfg.backbone_name;
  ac.ps = cfg.ablate_ps;
  ac.ts = cfg.ablate_ts;
  ac.structure_opts.assign(cfg.ablate_structure.begin(), cfg.ablate_structure.end());
  ac.seeds.clear();
  for (size_t i = 0; i < cfg.ablate_num_seeds; ++i)
    ac.seeds.push_back(derive_seed(cfg.seed, "ablate:" + std::to_string(i)));
  ac.reduction_dim = cfg.structure_r;
  ac.min_cluster_size = cfg.structure_min_cluster_size;
  ac.min_samples = cfg.structure_min_samples;
  ac.assign_tolerance = cfg.structure_tolerance;
  ac.base = cfg.head;
  ac.base.d = store.d;
  ac.base.num_outputs = cfg.task.logit_width();
  ac.train.epochs = cfg.head_epochs;
  ac.train.lr = cfg.head_lr;
  ac.train.batch_size = cfg.head_batch_size;
  ac.wiring = cfg.wiring;
  ac.workers = cfg.workers;

  auto rows = head::ablation_grid(store, corp, ac);

  // Structure-contrast significance rows, one per (p, t, split, metric).
  const std::string p_label = eval::ttest_kind_name(cfg.ttest) + "_p";
  std::vector<head::AblationRow> extra;
  for (const auto& [key, cell] : collect_contrasts(rows)) {
    if (cell.with_structure.size() < 2 || cell.without_structure.size() < 2)
      continue;
    const auto res = eval::significance_test(cell.with_structure,
                                             cell.without_structure, cfg.ttest);
    head::AblationRow row;
    row.backbone = cfg.backbone_name;
    row.p = std::get<0>(key);
    row.t = std::get<1>(key);
    row.use_structure = true;
    row.seed = p_label;
    row.split = std::get<2>(key);
    row.metric = std::get<3>(key);
    row.value = res.p;
    extra.push_back(std::move(row));
  }
  rows.insert(rows.end(), extra.begin(), extra.end());
  head::save_ablation_csv(rows, join(cfg.out_dir, kAblationCsv));

  record_stage(manifest, cfg.out_dir, "ablate", ablate_hash(cfg),
               {{"ablation", kAblationCsv}});
  save_manifest(manifest, cfg.out_dir);

  for (const auto& row : rows) {
    if (row.seed == "mean" && row.split == "test" && row.metric == "macro_f1")
      std::cout << "ablate: p=" << row.p << " t=" << row.t << " structure="
                << (row.use_structure ? "on" : "off")
                << " test macro F1 mean " << row.value << "\n";
  }
  for (const auto& row : rows) {
    if (row.seed == p_label && row.split == "test" && row.metric == "macro_f1")
      std::cout << "ablate: p=" << row.p << " t=" << row.t
                << " structure contrast p-value " << row.value << "\n";
  }
}

void cmd_analyze_chunks(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out_dir(cfg);
  write_snapshot(cfg);
  auto manifest = load_manifest(cfg.out_dir);
  manifest.config_hash = config_hash(cfg);
  require_stage(manifest, cfg.out_dir, "prepare_corpus", prepare_corpus_hash(cfg));
  require_stage(manifest, cfg.out_dir, "prepare_chunks", prepare_chunks_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage1", stage1_hash(cfg));
  require_stage(manifest, cfg.out_dir, "stage2", stage2_hash(cfg));
  if (cfg.head.use_structure)
    require_stage(manifest, cfg.out_dir, "stage3", stage3_hash(cfg));
  require_stage(manifest, cfg.out_dir, "train_head", train_head_hash(cfg));

  const auto prepared = load_prepared(cfg);
  const auto backbone_model = load_backbone(cfg, prepared.vocab.size());
  const auto hs = load_head_setup(cfg);
  const size_t u = cfg.task.logit_width();

  // Per-document inputs on the test split: one backbone logit row per chunk
  // plus the whole-document head logits.
  std::vector<size_t> test_idx;
  for (size_t i = 0; i < prepared.corpus.docs.size(); ++i)
    if (prepared.corpus.docs[i].split == "test") test_idx.push_back(i);

  std::vector<eval::PerChunkDoc> docs(test_idx.size());
  parallel_for(test_idx.size(), cfg.workers, [&](size_t begin, size_t end) {
    nn::NoGradGuard guard;
    for (size_t k = begin; k < end; ++k) {
      const auto& doc = prepared.corpus.docs[test_idx[k]];
      const auto& cs = prepared.chunks[test_idx[k]];
      eval::PerChunkDoc pd;
      pd.doc_id = doc.id;
      pd.gold = doc.labels;
      pd.n_chunks = cs.chunks.size();
      pd.chunk_logits.reserve(pd.n_chunks * u);
      for (const auto& ch : cs.chunks) {
        const auto fwd =
            backbone::backbone_forward(backbone_model, ch.token_ids, ch.pad_mask, false);
        pd.chunk_logits.insert(pd.chunk_logits.end(), fwd.logits->values.begin(),
                               fwd.logits->values.end());
      }
      const auto examples = head::make_head_examples(
          hs.store, {doc.id}, structure_view(cfg, hs), hs.config);
      const auto out = head::head_forward(
          hs.model, examples[0].combined, examples[0].n_chunks,
          examples[0].histogram.empty() ? nullptr : &examples[0].histogram);
      pd.pipeline_logits = out.logits->values;
      docs[k] = std::move(pd);
    }
  });

  const auto points =
      eval::per_chunk_analysis(docs, cfg.task, cfg.min_chunk_filters);
  eval::save_analysis_csv(points, join(cfg.out_dir, kPerChunkCsv));

  const uint64_t analyze_hash =
      train_head_hash(cfg) ^ stage1_hash(cfg) ^ fnv1a64("analyze_chunks");
  record_stage(manifest, cfg.out_dir, "analyze_chunks", analyze_hash,
               {{"per_chunk", kPerChunkCsv}});
  save_manifest(manifest, cfg.out_dir);

  for (const auto& pt : points)
    if (pt.source == "pipeline")
      std::cout << "analyze-chunks: filter >=" << pt.min_chunks
                << " chunks, pipeline micro F1 " << pt.micro_f1 << "\n";
}

}  // namespace mesc::pipeline
