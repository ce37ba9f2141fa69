#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mesc/corpus/document.hpp"

namespace mesc::corpus {

// How the planted document label is derived from the generated parts.
//   motif_presence:     label j <=> motif token "motj" appears inside the
//                       informative part (binary: motif present vs absent).
//   part_count_compare: label 1 <=> part A holds more tokens than part B,
//                       with an enforced share margin; binary only.
//   part_cooccur:       label 1 <=> parts A and B both occur, planted in
//                       distant halves of the document; binary only.
enum class LabelMode { motif_presence, part_count_compare, part_cooccur };

std::string label_mode_name(LabelMode m);
LabelMode label_mode_from_name(const std::string& name);

struct SyntheticSpec {
  size_t num_docs = 200;
  size_t min_len = 256;  // document token length range (inclusive)
  size_t max_len = 1024;
  size_t num_parts = 3;
  CorpusTask task;
  LabelMode label_mode = LabelMode::motif_presence;

  size_t part_len_min = 24;  // tokens per part segment
  size_t part_len_max = 64;
  size_t tokens_per_part = 40;  // size of each part-specific pool
  size_t common_tokens = 60;    // size of the shared pool
  double common_frac = 0.3;     // chance a token is drawn from the shared pool

  // motif_presence: part hosting the motif; -1 = any part. Position selects
  // the host segment among candidates: anywhere | first | last.
  int informative_part = 1;
  std::string informative_position = "anywhere";

  // part_count_compare: the two compared parts and the minimum token-share gap.
  int count_part_a = 0;
  int count_part_b = 1;
  double count_margin = 0.10;

  // part_cooccur: the two parts whose joint presence defines label 1.
  int cooccur_part_a = 0;
  int cooccur_part_b = 1;

  double train_frac = 0.7;
  double val_frac = 0.15;
  uint64_t seed = 1;
};

// Hidden ground truth: which part generated tokens [begin, end) of a document.
// Used only to score clustering quality, never shown to the model.
struct PartSpan {
  int part = 0;
  size_t begin = 0;
  size_t end = 0;
};

using PartSpanMap = std::unordered_map<std::string, std::vector<PartSpan>>;

struct SyntheticCorpus {
  Corpus corpus;
  PartSpanMap spans;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// Sidecar JSONL: {"id": str, "spans": [[part, begin, end], ...]} per document.
void save_spans(const std::string& path, const PartSpanMap& spans);
PartSpanMap load_spans(const std::string& path);

// Majority generating part for each chunk window [start, start+width) of a
// document, given its spans; ties broken toward the lower part id.
int majority_part(const std::vector<PartSpan>& spans, size_t start, size_t end);

}  // namespace mesc::corpus
