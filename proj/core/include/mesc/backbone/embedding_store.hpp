#pragma once

#include <string>
#include <vector>

#include "mesc/backbone/backbone.hpp"
#include "mesc/chunker/chunker.hpp"

namespace mesc::backbone {

// Stage-2 artifact: for every document, per-chunk pooled vectors from the last
// l backbone layers, row-major [N_D][l][d] with layer rows ordered deepest-last.
struct EmbeddingStore {
  size_t l = 0;
  size_t d = 0;

  struct DocRecord {
    std::string id;
    size_t n_chunks = 0;
    std::vector<int> gold_labels;
    std::vector<float> data;  // n_chunks * l * d

    const float* chunk_layer(size_t chunk, size_t layer, size_t l, size_t d) const {
      return data.data() + (chunk * l + layer) * d;
    }
  };

  std::vector<DocRecord> docs;

  const DocRecord* find(const std::string& id) const;
};

// Frozen-checkpoint extraction, parallel across documents; output order and
// bytes depend only on the inputs, not the worker count.
EmbeddingStore extract_stage2(const BackboneModel& m,
                              const std::vector<chunker::ChunkSet>& docs,
                              size_t workers);

// File layout: magic "MESCEMB", version u32, l u32, d u32, doc count u64, then
// per document: id string, N_D u32, label count u32 + i32 labels,
// N_D*l*d little-endian float32 values.
void save_store(const std::string& path, const EmbeddingStore& store);
EmbeddingStore load_store(const std::string& path);

}  // namespace mesc::backbone
