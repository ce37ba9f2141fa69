#include "mesc/chunker/chunker.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "mesc/corpus/vocab.hpp"

namespace mesc::chunker {

void ChunkParams::validate() const {
  if (width == 0) throw std::invalid_argument("chunk width must be positive");
  if (overlap >= width)
    throw std::invalid_argument("chunk overlap " + std::to_string(overlap) +
                                " must be smaller than width " + std::to_string(width));
  if (overlap > width / 4)
    throw std::invalid_argument("chunk overlap " + std::to_string(overlap) +
                                " exceeds width/4 = " + std::to_string(width / 4));
}

size_t chunk_count(size_t length, const ChunkParams& params) {
  params.validate();
  if (length == 0) throw std::invalid_argument("cannot chunk an empty sequence");
  if (length <= params.width) return 1;
  const size_t stride = params.stride();
  return (length - params.overlap + stride - 1) / stride;
}

ChunkSet chunk(const corpus::TokenSequence& ts, const std::vector<int>& gold_labels,
               const ChunkParams& params) {
  const size_t n_total = chunk_count(ts.ids.size(), params);
  const size_t stride = params.stride();
  size_t first = 0;
  if (params.max_chunks > 0 && n_total > params.max_chunks)
    first = n_total - params.max_chunks;

  ChunkSet cs;
  cs.doc_id = ts.doc_id;
  cs.gold_labels = gold_labels;
  for (size_t i = first; i < n_total; ++i) {
    Chunk c;
    c.index = i - first;
    c.start = i * stride;
    c.true_length = std::min(params.width, ts.ids.size() - c.start);
    c.token_ids.assign(params.width, corpus::Vocabulary::kPad);
    c.pad_mask.assign(params.width, 0);
    for (size_t j = 0; j < c.true_length; ++j) {
      c.token_ids[j] = ts.ids[c.start + j];
      c.pad_mask[j] = 1;
    }
    cs.chunks.push_back(std::move(c));
  }
  return cs;
}

Stage1Batch make_stage1_batch(const ChunkSet& cs) {
  Stage1Batch b;
  b.doc_id = cs.doc_id;
  b.gold_labels = cs.gold_labels;
  b.chunks.reserve(cs.chunks.size());
  for (const auto& c : cs.chunks) b.chunks.push_back(&c);
  return b;
}

ChunkHistogram chunk_count_histogram(const std::vector<corpus::TokenSequence>& corpus,
                                     const ChunkParams& params) {
  ChunkHistogram hist;
  std::vector<size_t> counts;
  counts.reserve(corpus.size());
  for (const auto& ts : corpus) {
    const size_t n = chunk_count(ts.ids.size(), params);
    ++hist.counts[n];
    counts.push_back(n);
  }
  if (!counts.empty()) {
    std::sort(counts.begin(), counts.end());
    const size_t mid = counts.size() / 2;
    hist.median = counts.size() % 2 == 1
                      ? static_cast<double>(counts[mid])
                      : (static_cast<double>(counts[mid - 1]) +
                         static_cast<double>(counts[mid])) /
                            2.0;
  }
  return hist;
}

void save_histogram_csv(const std::string& path, const ChunkHistogram& hist) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write histogram " + path);
  os << "num_chunks,num_docs\n";
  for (const auto& [n, docs] : hist.counts) os << n << "," << docs << "\n";
  if (!os) throw std::runtime_error("write failure on histogram " + path);
}

}  // namespace mesc::chunker
