#include <cmath>
#include <vector>

#include "doctest.h"
#include "mesc/eval/metrics.hpp"
#include "mesc/rng.hpp"
#include "support/metrics_oracle.hpp"

using namespace mesc;
using namespace mesc::eval;
using corpus::CorpusTask;
using corpus::TaskKind;
using mesc::test::metrics_oracle;

namespace {

PredictionRecord rec(std::vector<int> gold, std::vector<int> pred) {
  PredictionRecord r;
  r.doc_id = "d";
  r.gold = std::move(gold);
  r.predicted = std::move(pred);
  return r;
}

CorpusTask task_of(TaskKind kind, size_t u) {
  CorpusTask t;
  t.kind = kind;
  t.num_labels = u;
  return t;
}

}  // namespace

TEST_CASE("hand case: one miss on three binary docs gives 2/3 everywhere") {
  const auto task = task_of(TaskKind::binary, 2);
  std::vector<PredictionRecord> records = {
      rec({1}, {1}), rec({0}, {0}), rec({1}, {0})};
  auto m = compute_metrics(records, task);
  CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(m.micro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
  REQUIRE(m.per_class.size() == 2);
  // class 0: tp=1 fp=1 fn=0; class 1: tp=1 fp=0 fn=1
  CHECK(m.per_class[0].precision == doctest::Approx(0.5));
  CHECK(m.per_class[0].recall == doctest::Approx(1.0));
  CHECK(m.per_class[1].precision == doctest::Approx(1.0));
  CHECK(m.per_class[1].recall == doctest::Approx(0.5));
  CHECK(m.per_class[0].support == 1);
  CHECK(m.per_class[1].support == 2);
}

TEST_CASE("perfect predictions score 1.0 across the board") {
  const auto task = task_of(TaskKind::multi_class, 3);
  std::vector<PredictionRecord> records = {
      rec({0}, {0}), rec({1}, {1}), rec({2}, {2}), rec({1}, {1})};
  auto m = compute_metrics(records, task);
  CHECK(m.accuracy == doctest::Approx(1.0));
  CHECK(m.micro_f1 == doctest::Approx(1.0));
  CHECK(m.macro_f1 == doctest::Approx(1.0));
}

TEST_CASE("multi-class micro F1 equals accuracy") {
  Rng rng(91);
  const auto task = task_of(TaskKind::multi_class, 4);
  for (int t = 0; t < 20; ++t) {
    std::vector<PredictionRecord> records;
    const int n = rng.uniform_int(1, 30);
    for (int i = 0; i < n; ++i)
      records.push_back(
          rec({rng.uniform_int(0, 3)}, {rng.uniform_int(0, 3)}));
    auto m = compute_metrics(records, task);
    CHECK(m.micro_f1 == doctest::Approx(m.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("zero-support classes still drag the macro average") {
  const auto task = task_of(TaskKind::multi_class, 3);
  // class 2 never appears in gold or predictions: per-class F1 = 0
  std::vector<PredictionRecord> records = {rec({0}, {0}), rec({1}, {1})};
  auto m = compute_metrics(records, task);
  REQUIRE(m.per_class.size() == 3);
  CHECK(m.per_class[2].support == 0);
  CHECK(m.per_class[2].f1 == 0.0);
  CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.micro_f1 == doctest::Approx(1.0));
}

TEST_CASE("multi-label accuracy is exact set match") {
  const auto task = task_of(TaskKind::multi_label, 3);
  std::vector<PredictionRecord> records = {
      rec({1, 0, 1}, {1, 0, 1}),   // exact
      rec({1, 1, 0}, {1, 0, 0}),   // one label missed
      rec({0, 0, 0}, {0, 0, 1})};  // one spurious label
  auto m = compute_metrics(records, task);
  CHECK(m.accuracy == doctest::Approx(1.0 / 3.0));
  // pooled counts: tp=3 (2 from doc1 + 1 from doc2), fn=1, fp=1
  CHECK(m.micro_f1 == doctest::Approx(2.0 * 3 / (2.0 * 3 + 1 + 1)));
}

TEST_CASE("non-finite logits are rejected") {
  const auto task = task_of(TaskKind::binary, 2);
  auto r = rec({1}, {1});
  r.logits = {std::numeric_limits<float>::infinity()};
  CHECK_THROWS(compute_metrics({r}, task));
}

TEST_CASE("random instances agree with the exhaustive oracle") {
  Rng rng(92);
  for (int t = 0; t < 400; ++t) {
    const int kind_pick = rng.uniform_int(0, 2);
    const auto kind = kind_pick == 0   ? TaskKind::binary
                      : kind_pick == 1 ? TaskKind::multi_class
                                       : TaskKind::multi_label;
    const size_t u = kind == TaskKind::binary ? 2 : size_t(rng.uniform_int(2, 6));
    const auto task = task_of(kind, u);
    const int n = rng.uniform_int(1, 20);
    std::vector<PredictionRecord> records;
    for (int i = 0; i < n; ++i) {
      auto draw = [&] {
        std::vector<int> enc;
        if (kind == TaskKind::multi_label) {
          for (size_t j = 0; j < u; ++j) enc.push_back(rng.bernoulli(0.4));
        } else {
          enc.push_back(rng.uniform_int(0, int(u) - 1));
        }
        return enc;
      };
      records.push_back(rec(draw(), draw()));
    }
    auto m = compute_metrics(records, task);
    auto o = metrics_oracle(records, task);
    CHECK(m.accuracy == doctest::Approx(o.accuracy).epsilon(1e-9));
    CHECK(m.micro_f1 == doctest::Approx(o.micro_f1).epsilon(1e-9));
    CHECK(m.macro_f1 == doctest::Approx(o.macro_f1).epsilon(1e-9));
    REQUIRE(m.per_class.size() == o.per_class_f1.size());
    for (size_t c = 0; c < m.per_class.size(); ++c)
      CHECK(m.per_class[c].f1 ==
            doctest::Approx(o.per_class_f1[c]).epsilon(1e-9));
  }
}

TEST_CASE("json report carries names, metrics and support") {
  auto task = task_of(TaskKind::multi_class, 2);
  task.label_names = {"cat", "dog"};
  std::vector<PredictionRecord> records = {rec({0}, {0}), rec({1}, {0})};
  auto j = metrics_to_json(compute_metrics(records, task), task);
  CHECK(j["accuracy"] == doctest::Approx(0.5));
  REQUIRE(j["per_class"].size() == 2);
  CHECK(j["per_class"][0]["class"] == "cat");
  CHECK(j["per_class"][1]["class"] == "dog");
  CHECK(j["per_class"][0]["support"] == 1);
}
