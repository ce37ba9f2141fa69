#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mesc/corpus/document.hpp"

namespace mesc::chunker {

struct ChunkParams {
  size_t width = 512;     // c
  size_t overlap = 90;    // o, enforced o <= c/4
  size_t max_chunks = 0;  // 0 = uncapped; truncation keeps the final chunks

  size_t stride() const { return width - overlap; }
  void validate() const;  // throws std::invalid_argument
};

struct Chunk {
  size_t index = 0;        // position within the document, 0-based
  size_t start = 0;        // first token offset in the source sequence
  size_t true_length = 0;  // tokens before padding
  std::vector<int> token_ids;     // padded to width with PAD
  std::vector<uint8_t> pad_mask;  // 1 = real token, 0 = padding
};

struct ChunkSet {
  std::string doc_id;
  std::vector<Chunk> chunks;
  std::vector<int> gold_labels;  // the document's label encoding
};

// Coverage-minimal count for the sliding window: 1 window when L <= c, else
// ceil((L - o) / (c - o)); every window past the first adds at least one new
// token.
size_t chunk_count(size_t length, const ChunkParams& params);

ChunkSet chunk(const corpus::TokenSequence& ts, const std::vector<int>& gold_labels,
               const ChunkParams& params);

// Stage-1 batch: every chunk of the document paired with the document label.
struct Stage1Batch {
  std::string doc_id;
  std::vector<const Chunk*> chunks;
  std::vector<int> gold_labels;
};

Stage1Batch make_stage1_batch(const ChunkSet& cs);

// num-chunks -> num-docs over a tokenized corpus, plus the median count.
struct ChunkHistogram {
  std::map<size_t, size_t> counts;
  double median = 0.0;
};

ChunkHistogram chunk_count_histogram(const std::vector<corpus::TokenSequence>& corpus,
                                     const ChunkParams& params);
void save_histogram_csv(const std::string& path, const ChunkHistogram& hist);

}  // namespace mesc::chunker
