#include <vector>

#include "doctest.h"
#include "mesc/backbone/backbone.hpp"
#include "mesc/chunker/chunker.hpp"
#include "mesc/corpus/document.hpp"
#include "mesc/rng.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::backbone;

namespace {

BackboneConfig tiny_config(Mode mode = Mode::bidirectional_cls) {
  BackboneConfig cfg;
  cfg.mode = mode;
  cfg.num_layers = 2;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.ffn_dim = 32;
  cfg.max_positions = 9;  // chunk width 8 + CLS
  cfg.vocab_size = 24;
  cfg.extract_layers = 2;
  cfg.logit_width = 1;
  return cfg;
}

corpus::CorpusTask binary_task() {
  corpus::CorpusTask t;
  t.kind = corpus::TaskKind::binary;
  t.num_labels = 2;
  return t;
}

// One-chunk document whose label is decided by the presence of token 5.
chunker::ChunkSet motif_doc(const std::string& id, bool positive, Rng& rng) {
  corpus::TokenSequence ts;
  ts.doc_id = id;
  for (int i = 0; i < 8; ++i) ts.ids.push_back(rng.uniform_int(6, 20));
  if (positive) ts.ids[size_t(rng.uniform_int(0, 7))] = 5;
  chunker::ChunkParams params;
  params.width = 8;
  params.overlap = 0;
  return chunker::chunk(ts, {positive ? 1 : 0}, params);
}

}  // namespace

TEST_CASE("forward produces sane shapes and captures the last layers") {
  Rng rng(111);
  BackboneModel m;
  m.init(tiny_config(), rng);
  std::vector<int> ids = {3, 4, 5, 6, 7, 0, 0, 0};
  std::vector<uint8_t> mask = {1, 1, 1, 1, 1, 0, 0, 0};
  auto fwd = backbone_forward(m, ids, mask, true);
  REQUIRE(fwd.logits->shape == std::vector<size_t>{1, 1});
  REQUIRE(fwd.pooled->shape == std::vector<size_t>{1, 16});
  REQUIRE(fwd.captured.size() == 2);
  // deepest capture is the final pooled vector itself
  CHECK(fwd.captured.back()->values == fwd.pooled->values);
  CHECK(fwd.captured[0]->values != fwd.captured[1]->values);
  for (const auto& c : fwd.captured) CHECK(c->all_finite());

  auto quiet = backbone_forward(m, ids, mask, false);
  CHECK(quiet.captured.empty());
  CHECK(quiet.logits->values == fwd.logits->values);
}

TEST_CASE("init is deterministic and params cover every tensor") {
  Rng ra(7), rb(7);
  BackboneModel a, b;
  a.init(tiny_config(), ra);
  b.init(tiny_config(), rb);
  auto pa = a.params(), pb = b.params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(pa[i].tensor->values == pb[i].tensor->values);
  }
  // embeddings + per-layer params + classifier
  CHECK(pa.size() == 2 + 2 * (2 * 4 + 8) + 2);
}

TEST_CASE("pad tokens never change the pooled representation") {
  Rng rng(112);
  BackboneModel m;
  m.init(tiny_config(), rng);
  std::vector<int> ids = {3, 9, 5, 0, 0, 0, 0, 0};
  std::vector<uint8_t> mask = {1, 1, 1, 0, 0, 0, 0, 0};
  auto base = backbone_forward(m, ids, mask, false);
  // rewrite the padded tail with arbitrary token ids
  std::vector<int> noisy = {3, 9, 5, 17, 2, 11, 23, 4};
  auto same = backbone_forward(m, noisy, mask, false);
  CHECK(base.logits->values == same.logits->values);
  CHECK(base.pooled->values == same.pooled->values);
}

TEST_CASE("causal mode pools the last real token and ignores the tail") {
  Rng rng(113);
  auto cfg = tiny_config(Mode::causal_last_token);
  cfg.max_positions = 8;
  BackboneModel m;
  m.init(cfg, rng);
  std::vector<int> ids = {3, 9, 5, 12, 0, 0, 0, 0};
  std::vector<uint8_t> mask = {1, 1, 1, 1, 0, 0, 0, 0};
  auto base = backbone_forward(m, ids, mask, false);
  std::vector<int> noisy = ids;
  noisy[5] = 21;
  noisy[7] = 2;
  auto same = backbone_forward(m, noisy, mask, false);
  CHECK(base.pooled->values == same.pooled->values);
  // but changing a real prefix token does matter
  std::vector<int> changed = ids;
  changed[0] = 4;
  auto moved = backbone_forward(m, changed, mask, false);
  CHECK(moved.pooled->values != base.pooled->values);
}

TEST_CASE("mode names round-trip") {
  CHECK(mode_from_name(mode_name(Mode::bidirectional_cls)) == Mode::bidirectional_cls);
  CHECK(mode_from_name(mode_name(Mode::causal_last_token)) == Mode::causal_last_token);
  CHECK_THROWS(mode_from_name("bert"));
}

TEST_CASE("fine-tuning memorizes a separable motif") {
  Rng rng(114);
  std::vector<chunker::ChunkSet> train, val;
  for (int i = 0; i < 16; ++i) train.push_back(motif_doc("t" + std::to_string(i), i % 2, rng));
  for (int i = 0; i < 6; ++i) val.push_back(motif_doc("v" + std::to_string(i), i % 2, rng));

  BackboneModel m;
  Rng init_rng(115);
  m.init(tiny_config(), init_rng);
  Stage1TrainConfig tc;
  tc.epochs = 30;
  tc.lr = 5e-3f;
  tc.seed = 9;
  auto result = finetune_stage1(m, train, val, binary_task(), tc);
  REQUIRE(result.history.size() == 30);
  CHECK(result.history.front().epoch == 1);
  CHECK(result.history.back().epoch == 30);
  CHECK(result.best_epoch >= 1);
  CHECK(result.best_epoch <= 30);
  for (const auto& e : result.history) CHECK(std::isfinite(e.train_loss));
  // the kept parameters achieve the best recorded validation accuracy
  double best_acc = 0.0;
  for (const auto& e : result.history) best_acc = std::max(best_acc, e.val_accuracy);
  CHECK(chunk_level_accuracy(m, val, binary_task()) == doctest::Approx(best_acc));
  CHECK(best_acc == doctest::Approx(1.0));
  CHECK(chunk_level_accuracy(m, train, binary_task()) > 0.9);

  // training loss actually went somewhere
  CHECK(result.history.back().train_loss < result.history.front().train_loss);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  Rng rng(116);
  std::vector<chunker::ChunkSet> train = {motif_doc("a", true, rng),
                                          motif_doc("b", false, rng)};
  BackboneModel m;
  Rng init_rng(117);
  m.init(tiny_config(), init_rng);
  std::vector<std::vector<float>> before;
  for (const auto& p : m.params()) before.push_back(p.tensor->values);
  Stage1TrainConfig tc;
  tc.epochs = 2;
  tc.lr = 0.0f;
  finetune_stage1(m, train, {}, binary_task(), tc);
  auto after = m.params();
  for (size_t i = 0; i < after.size(); ++i)
    CHECK(after[i].tensor->values == before[i]);
}

TEST_CASE("predict_chunks returns one encoding per chunk") {
  Rng rng(118);
  BackboneModel m;
  m.init(tiny_config(), rng);
  corpus::TokenSequence ts;
  ts.doc_id = "long";
  for (int i = 0; i < 20; ++i) ts.ids.push_back(3 + i % 10);
  chunker::ChunkParams params;
  params.width = 8;
  params.overlap = 2;
  auto cs = chunker::chunk(ts, {1}, params);
  auto preds = predict_chunks(m, cs, binary_task());
  REQUIRE(preds.size() == cs.chunks.size());
  for (const auto& p : preds) {
    REQUIRE(p.size() == 1);
    CHECK((p[0] == 0 || p[0] == 1));
  }
}
