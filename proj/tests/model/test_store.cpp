#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "mesc/backbone/backbone.hpp"
#include "mesc/backbone/embedding_store.hpp"
#include "mesc/nn/checkpoint.hpp"
#include "mesc/rng.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::backbone;

namespace {

BackboneConfig tiny_config() {
  BackboneConfig cfg;
  cfg.num_layers = 3;
  cfg.d = 12;
  cfg.heads = 2;
  cfg.ffn_dim = 24;
  cfg.max_positions = 7;
  cfg.vocab_size = 30;
  cfg.extract_layers = 2;
  cfg.logit_width = 2;
  return cfg;
}

std::vector<chunker::ChunkSet> sample_docs(Rng& rng, size_t n_docs) {
  chunker::ChunkParams params;
  params.width = 6;
  params.overlap = 1;
  std::vector<chunker::ChunkSet> docs;
  for (size_t i = 0; i < n_docs; ++i) {
    corpus::TokenSequence ts;
    ts.doc_id = "doc" + std::to_string(i);
    const size_t len = 4 + (i * 7) % 18;
    for (size_t j = 0; j < len; ++j) ts.ids.push_back(rng.uniform_int(3, 29));
    docs.push_back(chunker::chunk(ts, {int(i % 2)}, params));
  }
  return docs;
}

}  // namespace

TEST_CASE("extraction stores per-chunk rows for the last l layers") {
  Rng rng(121);
  BackboneModel m;
  m.init(tiny_config(), rng);
  auto docs = sample_docs(rng, 5);
  auto store = extract_stage2(m, docs, 1);
  CHECK(store.l == 2);
  CHECK(store.d == 12);
  REQUIRE(store.docs.size() == 5);
  for (size_t i = 0; i < docs.size(); ++i) {
    const auto& rec = store.docs[i];
    CHECK(rec.id == docs[i].doc_id);
    CHECK(rec.n_chunks == docs[i].chunks.size());
    CHECK(rec.gold_labels == docs[i].gold_labels);
    CHECK(rec.data.size() == rec.n_chunks * 2 * 12);
  }

  // rows must equal a direct forward pass with capture enabled
  const auto& doc0 = docs[0];
  auto fwd = backbone_forward(m, doc0.chunks[0].token_ids,
                              doc0.chunks[0].pad_mask, true);
  REQUIRE(fwd.captured.size() == 2);
  for (size_t layer = 0; layer < 2; ++layer) {
    const float* row = store.docs[0].chunk_layer(0, layer, 2, 12);
    for (size_t j = 0; j < 12; ++j)
      CHECK(row[j] == fwd.captured[layer]->values[j]);
  }
  CHECK(store.find("doc3") != nullptr);
  CHECK(store.find("nope") == nullptr);
}

TEST_CASE("extraction bytes do not depend on the worker count") {
  Rng rng(122);
  BackboneModel m;
  m.init(tiny_config(), rng);
  auto docs = sample_docs(rng, 9);
  auto one = extract_stage2(m, docs, 1);
  auto many = extract_stage2(m, docs, 4);
  REQUIRE(one.docs.size() == many.docs.size());
  for (size_t i = 0; i < one.docs.size(); ++i) {
    CHECK(one.docs[i].id == many.docs[i].id);
    CHECK(one.docs[i].data == many.docs[i].data);
  }
}

TEST_CASE("store files round-trip byte-exactly") {
  Rng rng(123);
  BackboneModel m;
  m.init(tiny_config(), rng);
  auto docs = sample_docs(rng, 4);
  auto store = extract_stage2(m, docs, 2);
  mesc::test::TempDir tmp("store");
  const auto path = tmp.file("embeddings.bin");
  save_store(path, store);
  auto loaded = load_store(path);
  CHECK(loaded.l == store.l);
  CHECK(loaded.d == store.d);
  REQUIRE(loaded.docs.size() == store.docs.size());
  for (size_t i = 0; i < store.docs.size(); ++i) {
    CHECK(loaded.docs[i].id == store.docs[i].id);
    CHECK(loaded.docs[i].n_chunks == store.docs[i].n_chunks);
    CHECK(loaded.docs[i].gold_labels == store.docs[i].gold_labels);
    CHECK(loaded.docs[i].data == store.docs[i].data);
  }
  // saving the loaded store reproduces identical bytes
  const auto path2 = tmp.file("again.bin");
  save_store(path2, loaded);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK(b1.substr(0, 7) == "MESCEMB");
}

TEST_CASE("corrupt store files are rejected") {
  mesc::test::TempDir tmp("badstore");
  const auto path = tmp.file("bad.bin");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTMESC garbage";
  }
  CHECK_THROWS(load_store(path));
  CHECK_THROWS(load_store(tmp.file("missing.bin")));
}

TEST_CASE("checkpoints restore every parameter by name") {
  Rng rng(124);
  BackboneModel m;
  m.init(tiny_config(), rng);
  mesc::test::TempDir tmp("ckpt");
  const auto path = tmp.file("backbone.ckpt");
  nn::save_checkpoint(path, m.params());

  BackboneModel fresh;
  Rng other(999);
  fresh.init(tiny_config(), other);
  bool differed = false;
  auto mp = m.params(), fp = fresh.params();
  for (size_t i = 0; i < mp.size(); ++i)
    differed = differed || mp[i].tensor->values != fp[i].tensor->values;
  REQUIRE(differed);

  nn::load_checkpoint_into(path, fresh.params());
  fp = fresh.params();
  for (size_t i = 0; i < mp.size(); ++i)
    CHECK(mp[i].tensor->values == fp[i].tensor->values);

  // magic at the front of the file
  std::ifstream is(path, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  CHECK(std::string(magic, 4) == "MESC");
}

TEST_CASE("checkpoint loading is strict about the parameter set") {
  Rng rng(125);
  BackboneModel m;
  m.init(tiny_config(), rng);
  auto params = m.params();
  mesc::test::TempDir tmp("strict");

  // file missing one parameter
  const auto missing = tmp.file("missing.ckpt");
  nn::save_checkpoint(missing,
                      std::vector<nn::NamedParam>(params.begin(), params.end() - 1));
  CHECK_THROWS(nn::load_checkpoint_into(missing, params));

  // file with an extra parameter
  const auto extra = tmp.file("extra.ckpt");
  auto more = params;
  more.push_back({"stray", nn::Tensor::from({2}, {1.0f, 2.0f})});
  nn::save_checkpoint(extra, more);
  CHECK_THROWS(nn::load_checkpoint_into(extra, params));

  // shape mismatch on one parameter
  const auto shapes = tmp.file("shape.ckpt");
  auto renamed = params;
  renamed[0].tensor = nn::Tensor::from({1, 2}, {0.5f, 0.25f});
  nn::save_checkpoint(shapes, renamed);
  CHECK_THROWS(nn::load_checkpoint_into(shapes, params));

  // plain load returns every record
  auto all = nn::load_checkpoint(missing);
  CHECK(all.size() == params.size() - 1);
}
