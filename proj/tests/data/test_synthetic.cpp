#include <algorithm>
#include <set>

#include "doctest.h"
#include "mesc/corpus/synthetic.hpp"
#include "mesc/corpus/vocab.hpp"
#include "support/test_util.hpp"

using namespace mesc::corpus;

namespace {

SyntheticSpec base_spec() {
  SyntheticSpec s;
  s.num_docs = 60;
  s.min_len = 120;
  s.max_len = 300;
  s.num_parts = 3;
  s.task.kind = TaskKind::binary;
  s.task.num_labels = 2;
  s.seed = 42;
  return s;
}

size_t word_count(const Document& d) { return split_words(d.text).size(); }

bool has_token(const Document& d, const std::string& tok) {
  const auto words = split_words(d.text);
  return std::find(words.begin(), words.end(), tok) != words.end();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  auto a = generate_synthetic(base_spec());
  auto b = generate_synthetic(base_spec());
  REQUIRE(a.corpus.docs.size() == b.corpus.docs.size());
  for (size_t i = 0; i < a.corpus.docs.size(); ++i) {
    CHECK(a.corpus.docs[i].id == b.corpus.docs[i].id);
    CHECK(a.corpus.docs[i].text == b.corpus.docs[i].text);
    CHECK(a.corpus.docs[i].labels == b.corpus.docs[i].labels);
    CHECK(a.corpus.docs[i].split == b.corpus.docs[i].split);
  }
  auto spec2 = base_spec();
  spec2.seed = 43;
  auto c = generate_synthetic(spec2);
  bool differs = false;
  for (size_t i = 0; i < a.corpus.docs.size() && !differs; ++i)
    differs = a.corpus.docs[i].text != c.corpus.docs[i].text;
  CHECK(differs);
}

TEST_CASE("split sizes follow the rounded fractions") {
  auto s = base_spec();
  s.num_docs = 100;
  s.train_frac = 0.7;
  s.val_frac = 0.15;
  auto g = generate_synthetic(s);
  auto counts = g.corpus.split_counts();
  CHECK(counts["train"] == 70);
  CHECK(counts["val"] == 15);
  CHECK(counts["test"] == 15);
}

TEST_CASE("documents validate and spans tile every document exactly") {
  auto g = generate_synthetic(base_spec());
  for (const auto& d : g.corpus.docs) {
    CHECK_NOTHROW(validate_document(d, g.corpus.task));
    const auto it = g.spans.find(d.id);
    REQUIRE(it != g.spans.end());
    const auto& spans = it->second;
    REQUIRE(!spans.empty());
    CHECK(spans.front().begin == 0);
    for (size_t i = 0; i < spans.size(); ++i) {
      CHECK(spans[i].begin < spans[i].end);
      CHECK(spans[i].part >= 0);
      CHECK(size_t(spans[i].part) < base_spec().num_parts);
      if (i > 0) CHECK(spans[i].begin == spans[i - 1].end);
    }
    CHECK(spans.back().end == word_count(d));
    const size_t L = word_count(d);
    CHECK(L >= base_spec().min_len);
    CHECK(L <= base_spec().max_len);
  }
}

TEST_CASE("binary motif labels match motif presence in the text") {
  auto g = generate_synthetic(base_spec());
  size_t positives = 0;
  for (const auto& d : g.corpus.docs) {
    const bool present = has_token(d, "mot1");
    CHECK(present == (d.labels[0] == 1));
    positives += d.labels[0];
  }
  CHECK(positives > 5);  // both classes occur
  CHECK(positives < g.corpus.docs.size() - 5);
}

TEST_CASE("multi-class and multi-label motifs follow the encoding") {
  auto s = base_spec();
  s.task.kind = TaskKind::multi_class;
  s.task.num_labels = 4;
  auto g = generate_synthetic(s);
  std::set<int> seen;
  for (const auto& d : g.corpus.docs) {
    const int k = d.labels[0];
    seen.insert(k);
    CHECK(has_token(d, "mot" + std::to_string(k)));
  }
  CHECK(seen.size() == 4);

  auto ml = base_spec();
  ml.task.kind = TaskKind::multi_label;
  ml.task.num_labels = 3;
  auto gm = generate_synthetic(ml);
  for (const auto& d : gm.corpus.docs) {
    REQUIRE(d.labels.size() == 3);
    for (size_t j = 0; j < 3; ++j)
      if (d.labels[j] == 1) CHECK(has_token(d, "mot" + std::to_string(j)));
  }
}

TEST_CASE("part_count_compare labels agree with span token counts") {
  auto s = base_spec();
  s.label_mode = LabelMode::part_count_compare;
  s.num_docs = 80;
  auto g = generate_synthetic(s);
  size_t ones = 0;
  for (const auto& d : g.corpus.docs) {
    const auto& spans = g.spans.at(d.id);
    size_t a = 0, b = 0, total = 0;
    for (const auto& sp : spans) {
      const size_t len = sp.end - sp.begin;
      total += len;
      if (sp.part == s.count_part_a) a += len;
      if (sp.part == s.count_part_b) b += len;
    }
    CHECK((d.labels[0] == 1) == (a > b));
    // the planted share gap keeps the classes separable
    CHECK(double(a > b ? a - b : b - a) / double(total) >=
          s.count_margin - 1e-9);
    ones += d.labels[0];
  }
  CHECK(ones > 10);
  CHECK(ones < g.corpus.docs.size() - 10);
}

TEST_CASE("part_cooccur labels require both parts") {
  auto s = base_spec();
  s.label_mode = LabelMode::part_cooccur;
  s.num_docs = 80;
  auto g = generate_synthetic(s);
  size_t ones = 0;
  for (const auto& d : g.corpus.docs) {
    const auto& spans = g.spans.at(d.id);
    bool has_a = false, has_b = false;
    for (const auto& sp : spans) {
      has_a = has_a || sp.part == s.cooccur_part_a;
      has_b = has_b || sp.part == s.cooccur_part_b;
    }
    CHECK((d.labels[0] == 1) == (has_a && has_b));
    ones += d.labels[0];
  }
  CHECK(ones > 10);
  CHECK(ones < g.corpus.docs.size() - 10);
}

TEST_CASE("span files round-trip") {
  auto g = generate_synthetic(base_spec());
  mesc::test::TempDir tmp("spans");
  const auto path = tmp.file("s.jsonl");
  save_spans(path, g.spans);
  auto r = load_spans(path);
  REQUIRE(r.size() == g.spans.size());
  for (const auto& [id, spans] : g.spans) {
    const auto it = r.find(id);
    REQUIRE(it != r.end());
    REQUIRE(it->second.size() == spans.size());
    for (size_t i = 0; i < spans.size(); ++i) {
      CHECK(it->second[i].part == spans[i].part);
      CHECK(it->second[i].begin == spans[i].begin);
      CHECK(it->second[i].end == spans[i].end);
    }
  }
}

TEST_CASE("majority_part picks the dominant generator with low-id ties") {
  std::vector<PartSpan> spans = {{0, 0, 10}, {1, 10, 30}, {2, 30, 35}};
  CHECK(majority_part(spans, 0, 20) == 0);   // 10 vs 10 tie -> lower id
  CHECK(majority_part(spans, 5, 25) == 1);   // 5 vs 15
  CHECK(majority_part(spans, 28, 35) == 2);  // 2 vs 5
  CHECK(majority_part(spans, 0, 35) == 1);   // 10 vs 20 vs 5
}
