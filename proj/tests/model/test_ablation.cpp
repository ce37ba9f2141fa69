#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "mesc/head/ablation.hpp"
#include "mesc/rng.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::head;
using backbone::EmbeddingStore;

namespace {

struct Fixture {
  EmbeddingStore store;
  corpus::Corpus corpus;
};

// 18 train / 6 val / 6 test docs with a linearly separable deepest layer.
Fixture make_fixture() {
  Fixture f;
  f.corpus.task.kind = corpus::TaskKind::binary;
  f.corpus.task.num_labels = 2;
  f.store.l = 2;
  f.store.d = 4;
  Rng rng(151);
  for (size_t i = 0; i < 30; ++i) {
    const int label = int(i % 2);
    corpus::Document d;
    d.id = "d" + std::to_string(i);
    d.text = "unused";
    d.labels = {label};
    d.split = i < 18 ? "train" : (i < 24 ? "val" : "test");
    f.corpus.docs.push_back(d);

    EmbeddingStore::DocRecord rec;
    rec.id = d.id;
    rec.n_chunks = 1 + i % 3;
    rec.gold_labels = d.labels;
    rec.data.resize(rec.n_chunks * 2 * 4);
    for (auto& v : rec.data) v = float(rng.normal(label ? 1.5 : -1.5, 0.4));
    f.store.docs.push_back(std::move(rec));
  }
  return f;
}

AblationConfig small_ablation() {
  AblationConfig cfg;
  cfg.ps = {1};
  cfg.ts = {1};
  cfg.structure_opts = {false};
  cfg.seeds = {7, 8};
  cfg.reduction_dim = 2;
  cfg.min_cluster_size = 4;
  cfg.min_samples = 3;
  cfg.base.heads = 2;
  cfg.base.d = 4;
  cfg.base.ffn_t_width = 6;
  cfg.base.ffn_i_width = 5;
  cfg.base.max_chunks = 8;
  cfg.train.epochs = 6;
  cfg.train.lr = 1e-2f;
  cfg.train.batch_size = 4;
  return cfg;
}

}  // namespace

TEST_CASE("head predictions become scoreable records") {
  auto f = make_fixture();
  HeadConfig cfg;
  cfg.p = 1;
  cfg.t = 1;
  cfg.heads = 2;
  cfg.d = 4;
  cfg.ffn_t_width = 6;
  cfg.ffn_i_width = 5;
  cfg.max_chunks = 8;
  cfg.num_outputs = 1;
  Rng rng(152);
  HeadModel model;
  model.init(cfg, rng);
  auto examples = make_head_examples(f.store, {"d0", "d1", "d2"}, nullptr, cfg);
  auto records = head_predict_records(model, examples, f.corpus.task);
  REQUIRE(records.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(records[i].doc_id == examples[i].doc_id);
    CHECK(records[i].gold == examples[i].gold);
    REQUIRE(records[i].predicted.size() == 1);
    CHECK((records[i].predicted[0] == 0 || records[i].predicted[0] == 1));
    REQUIRE(records[i].logits.size() == 1);
    CHECK(std::isfinite(records[i].logits[0]));
  }
}

TEST_CASE("a degenerate grid yields per-seed rows plus aggregates") {
  auto f = make_fixture();
  auto cfg = small_ablation();
  auto rows = ablation_grid(f.store, f.corpus, cfg);

  // per-seed: 2 seeds x 2 splits x 3 metrics; aggregates: mean+std x 2 x 3
  size_t per_seed = 0, mean_rows = 0, std_rows = 0;
  for (const auto& r : rows) {
    CHECK(r.backbone == "mini");
    CHECK(r.p == 1);
    CHECK(r.t == 1);
    CHECK_FALSE(r.use_structure);
    if (r.seed == "mean") ++mean_rows;
    else if (r.seed == "std") ++std_rows;
    else ++per_seed;
  }
  CHECK(per_seed == 12);
  CHECK(mean_rows == 6);
  CHECK(std_rows == 6);

  // aggregates actually equal the mean/std of their per-seed rows
  for (const char* split : {"val", "test"})
    for (const char* metric : {"accuracy", "micro_f1", "macro_f1"}) {
      std::vector<double> vals;
      double mean = -1, stddev = -1;
      for (const auto& r : rows) {
        if (r.split != split || r.metric != metric) continue;
        if (r.seed == "mean") mean = r.value;
        else if (r.seed == "std") stddev = r.value;
        else vals.push_back(r.value);
      }
      REQUIRE(vals.size() == 2);
      const double want_mean = (vals[0] + vals[1]) / 2.0;
      const double want_std = std::sqrt(
          ((vals[0] - want_mean) * (vals[0] - want_mean) +
           (vals[1] - want_mean) * (vals[1] - want_mean)) / 1.0);
      CHECK(mean == doctest::Approx(want_mean).epsilon(1e-12));
      CHECK(stddev == doctest::Approx(want_std).epsilon(1e-12));
    }
}

TEST_CASE("structure cells reuse one clustering per p and can help") {
  auto f = make_fixture();
  auto cfg = small_ablation();
  cfg.structure_opts = {false, true};
  cfg.seeds = {7};
  auto rows = ablation_grid(f.store, f.corpus, cfg);
  std::set<bool> seen;
  for (const auto& r : rows) seen.insert(r.use_structure);
  CHECK(seen.size() == 2);
  // same seed, same split/metric: rows exist for both arms
  size_t with = 0, without = 0;
  for (const auto& r : rows)
    if (r.seed == "7" && r.split == "test" && r.metric == "macro_f1")
      (r.use_structure ? with : without) += 1;
  CHECK(with == 1);
  CHECK(without == 1);
}

TEST_CASE("grid runs are deterministic and worker-count independent") {
  auto f = make_fixture();
  auto cfg = small_ablation();
  auto a = ablation_grid(f.store, f.corpus, cfg);
  cfg.workers = 3;
  auto b = ablation_grid(f.store, f.corpus, cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].split == b[i].split);
    CHECK(a[i].metric == b[i].metric);
    CHECK(a[i].value == b[i].value);
  }
}

TEST_CASE("ablation CSV round-trips the pinned schema") {
  auto f = make_fixture();
  auto cfg = small_ablation();
  cfg.seeds = {7};
  auto rows = ablation_grid(f.store, f.corpus, cfg);
  mesc::test::TempDir tmp("ablation");
  const auto path = tmp.file("ablation.csv");
  save_ablation_csv(rows, path);
  std::ifstream is(path);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "backbone,p,t,use_structure,seed,split,metric,value");
  size_t n = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++n;
  CHECK(n == rows.size());
}

TEST_CASE("bad grid configs are rejected") {
  auto f = make_fixture();
  auto cfg = small_ablation();
  cfg.base.d = 8;  // != store.d
  CHECK_THROWS(ablation_grid(f.store, f.corpus, cfg));
  cfg = small_ablation();
  cfg.ps = {};
  CHECK_THROWS(ablation_grid(f.store, f.corpus, cfg));
  cfg = small_ablation();
  cfg.ps = {5};  // > store.l
  CHECK_THROWS(ablation_grid(f.store, f.corpus, cfg));
}
