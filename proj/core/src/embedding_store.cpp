#include "mesc/backbone/embedding_store.hpp"

#include <fstream>
#include <stdexcept>

#include "mesc/io_util.hpp"
#include "mesc/nn/ops.hpp"
#include "mesc/parallel.hpp"

namespace mesc::backbone {

namespace {
constexpr uint32_t kVersion = 1;
}

const EmbeddingStore::DocRecord* EmbeddingStore::find(const std::string& id) const {
  for (const auto& d : docs)
    if (d.id == id) return &d;
  return nullptr;
}

EmbeddingStore extract_stage2(const BackboneModel& m,
                              const std::vector<chunker::ChunkSet>& docs,
                              size_t workers) {
  EmbeddingStore store;
  store.l = m.cfg.extract_layers;
  store.d = m.cfg.d;
  store.docs.resize(docs.size());
  parallel_for(docs.size(), workers, [&](size_t begin, size_t end) {
    nn::NoGradGuard ng;
    for (size_t i = begin; i < end; ++i) {
      const auto& cs = docs[i];
      auto& rec = store.docs[i];
      rec.id = cs.doc_id;
      rec.n_chunks = cs.chunks.size();
      rec.gold_labels = cs.gold_labels;
      rec.data.resize(cs.chunks.size() * store.l * store.d);
      for (size_t ci = 0; ci < cs.chunks.size(); ++ci) {
        auto fwd = backbone_forward(m, cs.chunks[ci].token_ids, cs.chunks[ci].pad_mask,
                                    true);
        for (size_t li = 0; li < store.l; ++li)
          std::copy_n(fwd.captured[li]->values.data(), store.d,
                      rec.data.data() + (ci * store.l + li) * store.d);
      }
    }
  });
  return store;
}

void save_store(const std::string& path, const EmbeddingStore& store) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write embedding store " + path);
  write_magic(os, "MESCEMB");
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(store.l));
  write_u32(os, static_cast<uint32_t>(store.d));
  write_u64(os, store.docs.size());
  for (const auto& rec : store.docs) {
    write_string(os, rec.id);
    write_u32(os, static_cast<uint32_t>(rec.n_chunks));
    write_u32(os, static_cast<uint32_t>(rec.gold_labels.size()));
    for (int v : rec.gold_labels) write_i32(os, v);
    if (rec.data.size() != rec.n_chunks * store.l * store.d)
      throw std::logic_error("embedding record size mismatch for " + rec.id);
    write_f32s(os, rec.data.data(), rec.data.size());
  }
  if (!os) throw std::runtime_error("write failure on embedding store " + path);
}

EmbeddingStore load_store(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open embedding store " + path);
  expect_magic(is, "MESCEMB", path);
  const uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported store version " +
                             std::to_string(version));
  EmbeddingStore store;
  store.l = read_u32(is);
  store.d = read_u32(is);
  const uint64_t count = read_u64(is);
  store.docs.resize(count);
  for (auto& rec : store.docs) {
    rec.id = read_string(is);
    rec.n_chunks = read_u32(is);
    const uint32_t n_labels = read_u32(is);
    rec.gold_labels.resize(n_labels);
    for (auto& v : rec.gold_labels) v = read_i32(is);
    rec.data.resize(rec.n_chunks * store.l * store.d);
    read_f32s(is, rec.data.data(), rec.data.size());
  }
  return store;
}

}  // namespace mesc::backbone
