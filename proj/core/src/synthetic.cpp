#include "mesc/corpus/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "mesc/rng.hpp"

namespace mesc::corpus {

namespace {

// Motifs planted near a segment edge stay within the 16 tokens adjacent to it,
// so first/last-position corpora keep the motif inside the first/last chunk
// for any overlap >= 16.
constexpr size_t kMotifEdgeWindow = 16;
constexpr int kMaxResampleTries = 500;

struct Segment {
  int part;
  size_t len;
};

std::string part_token(int part, size_t i) {
  return "p" + std::to_string(part) + "w" + std::to_string(i);
}

std::string common_token(size_t i) { return "cw" + std::to_string(i); }

std::string motif_token(int j) { return "mot" + std::to_string(j); }

void validate_spec(const SyntheticSpec& s) {
  auto fail = [](const std::string& why) {
    throw std::invalid_argument("synthetic spec: " + why);
  };
  if (s.num_docs < 3) fail("need at least 3 documents");
  if (s.num_parts < 2) fail("need at least 2 parts");
  if (s.min_len < 1 || s.max_len < s.min_len) fail("bad length range");
  if (s.part_len_min < 1 || s.part_len_max < s.part_len_min)
    fail("bad part length range");
  if (s.tokens_per_part < 1 || s.common_tokens < 1) fail("empty token pools");
  if (s.common_frac < 0.0 || s.common_frac >= 1.0) fail("common_frac outside [0,1)");
  if (s.train_frac <= 0.0 || s.val_frac <= 0.0 || s.train_frac + s.val_frac >= 1.0)
    fail("split fractions must be positive and leave room for test");
  if (s.task.num_labels < 2) fail("task needs num_labels >= 2");

  switch (s.label_mode) {
    case LabelMode::motif_presence:
      if (s.informative_part >= static_cast<int>(s.num_parts))
        fail("informative_part out of range");
      if (s.informative_position != "anywhere" && s.informative_position != "first" &&
          s.informative_position != "last")
        fail("informative_position must be anywhere|first|last");
      if (s.part_len_min < kMotifEdgeWindow / 2) fail("parts too short to host motifs");
      break;
    case LabelMode::part_count_compare:
      if (s.task.kind != TaskKind::binary) fail("part_count_compare is a binary task");
      if (s.count_part_a == s.count_part_b ||
          s.count_part_a >= static_cast<int>(s.num_parts) ||
          s.count_part_b >= static_cast<int>(s.num_parts) || s.count_part_a < 0 ||
          s.count_part_b < 0)
        fail("count parts must be two distinct valid part ids");
      if (s.count_margin <= 0.0 || s.count_margin >= 0.9) fail("bad count_margin");
      break;
    case LabelMode::part_cooccur:
      if (s.task.kind != TaskKind::binary) fail("part_cooccur is a binary task");
      if (s.cooccur_part_a == s.cooccur_part_b ||
          s.cooccur_part_a >= static_cast<int>(s.num_parts) ||
          s.cooccur_part_b >= static_cast<int>(s.num_parts) || s.cooccur_part_a < 0 ||
          s.cooccur_part_b < 0)
        fail("cooccur parts must be two distinct valid part ids");
      break;
  }
}

size_t draw_len(const SyntheticSpec& s, Rng& rng) {
  return s.min_len + rng.uniform_u64(s.max_len - s.min_len + 1);
}

// Segments with parts drawn uniformly from `allowed`, lengths from the spec
// range, trimmed so the total is exactly L.
std::vector<Segment> random_segments(const SyntheticSpec& s,
                                     const std::vector<int>& allowed, size_t L,
                                     Rng& rng) {
  std::vector<Segment> segs;
  size_t total = 0;
  while (total < L) {
    Segment seg;
    seg.part = allowed[rng.uniform_u64(allowed.size())];
    seg.len = s.part_len_min + rng.uniform_u64(s.part_len_max - s.part_len_min + 1);
    if (total + seg.len > L) seg.len = L - total;
    total += seg.len;
    segs.push_back(seg);
  }
  return segs;
}

std::vector<int> all_parts(size_t num_parts) {
  std::vector<int> parts(num_parts);
  std::iota(parts.begin(), parts.end(), 0);
  return parts;
}

size_t count_tokens(const std::vector<Segment>& segs, int part) {
  size_t n = 0;
  for (const auto& s : segs)
    if (s.part == part) n += s.len;
  return n;
}

// ---- per-mode segment construction -----------------------------------------

std::vector<Segment> segments_for_count_compare(const SyntheticSpec& s, size_t L,
                                                int label, Rng& rng) {
  for (int attempt = 0; attempt < kMaxResampleTries; ++attempt) {
    auto segs = random_segments(s, all_parts(s.num_parts), L, rng);
    const double gap =
        (static_cast<double>(count_tokens(segs, s.count_part_a)) -
         static_cast<double>(count_tokens(segs, s.count_part_b))) /
        static_cast<double>(L);
    if (label == 1 ? gap >= s.count_margin : gap <= -s.count_margin) return segs;
  }
  throw std::invalid_argument(
      "synthetic spec: count_margin unreachable for the given length/part ranges");
}

std::vector<Segment> segments_for_cooccur(const SyntheticSpec& s, size_t L, int label,
                                          Rng& rng) {
  if (label == 1) {
    auto segs = random_segments(s, all_parts(s.num_parts), L, rng);
    if (segs.size() < 2) segs = {{0, L / 2}, {0, L - L / 2}};
    const size_t half = segs.size() / 2;
    segs[rng.uniform_u64(std::max<size_t>(half, 1))].part = s.cooccur_part_a;
    segs[half + rng.uniform_u64(segs.size() - half)].part = s.cooccur_part_b;
    return segs;
  }
  // Label 0 drops one of the two parts entirely, so they never co-occur.
  std::vector<int> allowed;
  const int dropped = rng.bernoulli(0.5) ? s.cooccur_part_a : s.cooccur_part_b;
  for (int p : all_parts(s.num_parts))
    if (p != dropped) allowed.push_back(p);
  return random_segments(s, allowed, L, rng);
}

std::vector<Segment> segments_for_motif(const SyntheticSpec& s, size_t L, Rng& rng) {
  auto segs = random_segments(s, all_parts(s.num_parts), L, rng);
  if (s.informative_part >= 0 &&
      count_tokens(segs, s.informative_part) == 0)
    segs[rng.uniform_u64(segs.size())].part = s.informative_part;
  return segs;
}

// Chooses the motif host segment index among candidates of the informative
// part (all segments when informative_part is -1).
size_t pick_host(const std::vector<Segment>& segs, const SyntheticSpec& s, Rng& rng) {
  std::vector<size_t> candidates;
  for (size_t i = 0; i < segs.size(); ++i)
    if (s.informative_part < 0 || segs[i].part == s.informative_part)
      candidates.push_back(i);
  if (s.informative_position == "first") return candidates.front();
  if (s.informative_position == "last") return candidates.back();
  return candidates[rng.uniform_u64(candidates.size())];
}

// Offset within the host segment; edge positions stay near the chosen edge so
// chunk-locality arguments hold.
size_t pick_offset(const Segment& seg, const std::string& position, Rng& rng) {
  const size_t window = std::min(seg.len, kMotifEdgeWindow);
  if (position == "first") return rng.uniform_u64(window);
  if (position == "last") return seg.len - window + rng.uniform_u64(window);
  return rng.uniform_u64(seg.len);
}

}  // namespace

std::string label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::motif_presence: return "motif_presence";
    case LabelMode::part_count_compare: return "part_count_compare";
    case LabelMode::part_cooccur: return "part_cooccur";
  }
  return "?";
}

LabelMode label_mode_from_name(const std::string& name) {
  if (name == "motif_presence") return LabelMode::motif_presence;
  if (name == "part_count_compare") return LabelMode::part_count_compare;
  if (name == "part_cooccur") return LabelMode::part_cooccur;
  throw std::invalid_argument(
      "unknown label mode '" + name +
      "' (expected motif_presence|part_count_compare|part_cooccur)");
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);
  const size_t u = spec.task.num_labels;

  SyntheticCorpus out;
  out.corpus.task = spec.task;
  if (out.corpus.task.label_names.empty())
    for (size_t j = 0; j < u; ++j)
      out.corpus.task.label_names.push_back("label" + std::to_string(j));

  for (size_t di = 0; di < spec.num_docs; ++di) {
    // Balanced label assignment; content is constructed to realize it.
    std::vector<int> labels;
    int scalar_label = 0;
    switch (spec.task.kind) {
      case TaskKind::binary:
        scalar_label = static_cast<int>(di % 2);
        labels = {scalar_label};
        break;
      case TaskKind::multi_class:
        scalar_label = static_cast<int>(di % u);
        labels = {scalar_label};
        break;
      case TaskKind::multi_label:
        labels.assign(u, 0);
        for (size_t j = 0; j < u; ++j) labels[j] = rng.bernoulli(0.5) ? 1 : 0;
        break;
    }

    const size_t L = draw_len(spec, rng);
    std::vector<Segment> segs;
    switch (spec.label_mode) {
      case LabelMode::motif_presence:
        segs = segments_for_motif(spec, L, rng);
        break;
      case LabelMode::part_count_compare:
        segs = segments_for_count_compare(spec, L, scalar_label, rng);
        break;
      case LabelMode::part_cooccur:
        segs = segments_for_cooccur(spec, L, scalar_label, rng);
        break;
    }

    std::vector<std::string> words;
    words.reserve(L);
    std::vector<PartSpan> spans;
    for (const auto& seg : segs) {
      PartSpan span{seg.part, words.size(), words.size() + seg.len};
      for (size_t i = 0; i < seg.len; ++i) {
        if (rng.uniform() < spec.common_frac)
          words.push_back(common_token(rng.uniform_u64(spec.common_tokens)));
        else
          words.push_back(part_token(seg.part, rng.uniform_u64(spec.tokens_per_part)));
      }
      spans.push_back(span);
    }

    if (spec.label_mode == LabelMode::motif_presence) {
      std::vector<int> planted;
      if (spec.task.kind == TaskKind::multi_class) {
        planted = {scalar_label};
      } else if (spec.task.kind == TaskKind::binary) {
        if (scalar_label == 1) planted = {1};
      } else {
        for (size_t j = 0; j < u; ++j)
          if (labels[j]) planted.push_back(static_cast<int>(j));
      }
      for (int j : planted) {
        const size_t host = pick_host(segs, spec, rng);
        size_t seg_begin = 0;
        for (size_t k = 0; k < host; ++k) seg_begin += segs[k].len;
        const size_t pos =
            seg_begin + pick_offset(segs[host], spec.informative_position, rng);
        words[pos] = motif_token(j);
      }
    }

    Document d;
    d.id = "d" + std::to_string(100000 + di).substr(1);
    d.labels = labels;
    d.split = "train";  // reassigned below
    d.text.reserve(L * 6);
    for (size_t i = 0; i < words.size(); ++i) {
      if (i) d.text.push_back(' ');
      d.text += words[i];
    }
    out.corpus.docs.push_back(std::move(d));
    out.spans[out.corpus.docs.back().id] = std::move(spans);
  }

  // Random split assignment with deterministic sizes.
  std::vector<size_t> order(spec.num_docs);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  size_t n_train = std::max<size_t>(
      1, static_cast<size_t>(spec.train_frac * static_cast<double>(spec.num_docs) + 0.5));
  size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(spec.val_frac * static_cast<double>(spec.num_docs) + 0.5));
  while (n_train + n_val + 1 > spec.num_docs) (n_train > n_val ? n_train : n_val) -= 1;
  for (size_t pos = 0; pos < order.size(); ++pos) {
    auto& doc = out.corpus.docs[order[pos]];
    doc.split = pos < n_train ? "train" : (pos < n_train + n_val ? "val" : "test");
  }
  return out;
}

void save_spans(const std::string& path, const PartSpanMap& spans) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write spans " + path);
  std::vector<std::string> ids;
  ids.reserve(spans.size());
  for (const auto& [id, _] : spans) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    nlohmann::ordered_json j;
    j["id"] = id;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : spans.at(id)) arr.push_back({s.part, s.begin, s.end});
    j["spans"] = arr;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("write failure on spans " + path);
}

PartSpanMap load_spans(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open spans " + path);
  PartSpanMap out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::vector<PartSpan> spans;
      for (const auto& e : j.at("spans"))
        spans.push_back({e.at(0).get<int>(), e.at(1).get<size_t>(),
                         e.at(2).get<size_t>()});
      out[j.at("id").get<std::string>()] = std::move(spans);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

int majority_part(const std::vector<PartSpan>& spans, size_t start, size_t end) {
  std::unordered_map<int, size_t> overlap;
  for (const auto& s : spans) {
    const size_t lo = std::max(start, s.begin);
    const size_t hi = std::min(end, s.end);
    if (hi > lo) overlap[s.part] += hi - lo;
  }
  int best = -1;
  size_t best_n = 0;
  for (const auto& [part, n] : overlap)
    if (n > best_n || (n == best_n && best >= 0 && part < best)) {
      best = part;
      best_n = n;
    }
  return best;
}

}  // namespace mesc::corpus
