#include <fstream>

#include "doctest.h"
#include "mesc/corpus/document.hpp"
#include "support/test_util.hpp"

using namespace mesc::corpus;

namespace {

Corpus small_corpus() {
  Corpus c;
  c.task.kind = TaskKind::multi_class;
  c.task.num_labels = 3;
  c.task.label_names = {"a", "b", "c"};
  c.docs = {
      {"d1", "first document body", {0}, "train"},
      {"d2", "second one", {2}, "train"},
      {"d3", "third \"quoted\" text\nwith newline", {1}, "val"},
      {"d4", "fourth", {2}, "test"},
  };
  return c;
}

}  // namespace

TEST_CASE("corpus JSONL round-trips including escapes and splits") {
  Corpus c = small_corpus();
  mesc::test::TempDir tmp("corpus");
  const auto path = tmp.file("c.jsonl");
  save_corpus(path, c);
  Corpus r = load_corpus(path, c.task);
  REQUIRE(r.docs.size() == c.docs.size());
  for (size_t i = 0; i < c.docs.size(); ++i) {
    CHECK(r.docs[i].id == c.docs[i].id);
    CHECK(r.docs[i].text == c.docs[i].text);
    CHECK(r.docs[i].labels == c.docs[i].labels);
    CHECK(r.docs[i].split == c.docs[i].split);
  }
  auto counts = r.split_counts();
  CHECK(counts["train"] == 2);
  CHECK(counts["val"] == 1);
  CHECK(counts["test"] == 1);
  auto train = r.split_docs("train");
  REQUIRE(train.size() == 2);
  CHECK(train[0]->id == "d1");
  CHECK(train[1]->id == "d2");
}

TEST_CASE("document validation enforces label arity per task") {
  CorpusTask binary;
  binary.kind = TaskKind::binary;
  binary.num_labels = 2;
  Document d{"x", "text", {1}, "train"};
  CHECK_NOTHROW(validate_document(d, binary));
  d.labels = {2};
  CHECK_THROWS_AS(validate_document(d, binary), std::invalid_argument);
  d.labels = {0, 1};
  CHECK_THROWS_AS(validate_document(d, binary), std::invalid_argument);

  CorpusTask mc;
  mc.kind = TaskKind::multi_class;
  mc.num_labels = 4;
  d.labels = {3};
  CHECK_NOTHROW(validate_document(d, mc));
  d.labels = {4};
  CHECK_THROWS_AS(validate_document(d, mc), std::invalid_argument);

  CorpusTask ml;
  ml.kind = TaskKind::multi_label;
  ml.num_labels = 3;
  d.labels = {1, 0, 1};
  CHECK_NOTHROW(validate_document(d, ml));
  d.labels = {1, 0};  // wrong arity
  CHECK_THROWS_AS(validate_document(d, ml), std::invalid_argument);
  d.labels = {1, 0, 2};  // not an indicator
  CHECK_THROWS_AS(validate_document(d, ml), std::invalid_argument);

  d.labels = {1, 0, 1};
  d.split = "holdout";
  CHECK_THROWS_AS(validate_document(d, ml), std::invalid_argument);
  d.split = "train";
  d.id = "";
  CHECK_THROWS_AS(validate_document(d, ml), std::invalid_argument);
}

TEST_CASE("malformed corpus lines are rejected with context") {
  mesc::test::TempDir tmp("badcorpus");
  CorpusTask task;
  task.kind = TaskKind::binary;
  task.num_labels = 2;

  const auto bad_json = tmp.file("bad.jsonl");
  {
    std::ofstream os(bad_json);
    os << "{\"id\":\"a\",\"text\":\"ok\",\"labels\":[1],\"split\":\"train\"}\n";
    os << "this is not json\n";
  }
  CHECK_THROWS(load_corpus(bad_json, task));

  const auto bad_label = tmp.file("label.jsonl");
  {
    std::ofstream os(bad_label);
    os << "{\"id\":\"a\",\"text\":\"ok\",\"labels\":[7],\"split\":\"train\"}\n";
  }
  CHECK_THROWS(load_corpus(bad_label, task));
  CHECK_THROWS(load_corpus(tmp.file("absent.jsonl"), task));
}

TEST_CASE("task kind names round-trip") {
  for (auto k : {TaskKind::binary, TaskKind::multi_class, TaskKind::multi_label})
    CHECK(task_kind_from_name(task_kind_name(k)) == k);
  CHECK_THROWS(task_kind_from_name("regression"));
  CHECK(CorpusTask{}.logit_width() == 1);
  CorpusTask mc;
  mc.kind = TaskKind::multi_class;
  mc.num_labels = 5;
  CHECK(mc.logit_width() == 5);
}
