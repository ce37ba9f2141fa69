#include "mesc/pipeline/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "mesc/rng.hpp"

namespace mesc::pipeline {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" +
                    value + "'");
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  uint64_t out = 0;
  const auto* begin = value.data();
  const auto* end = begin + value.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    bad_value(key, value, "a non-negative integer");
  return out;
}

size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<size_t>(parse_u64(key, value));
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto* begin = value.data();
  const auto* end = begin + value.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc{} || res.ptr != end) bad_value(key, value, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value, "a number");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
}

float parse_float(const std::string& key, const std::string& value) {
  return static_cast<float>(parse_double(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean (true|false|1|0)");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) parts.push_back(trim(item));
  return parts;
}

std::vector<size_t> parse_size_list(const std::string& key,
                                    const std::string& value) {
  std::vector<size_t> out;
  for (const auto& item : split_list(value)) out.push_back(parse_size(key, item));
  return out;
}

std::vector<bool> parse_bool_list(const std::string& key,
                                  const std::string& value) {
  std::vector<bool> out;
  for (const auto& item : split_list(value)) out.push_back(parse_bool(key, item));
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_float(float v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_size_list(const std::vector<size_t>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string fmt_bool_list(const std::vector<bool>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += xs[i] ? '1' : '0';
  }
  return out;
}

struct KeyDef {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    auto add = [&](const char* key, auto set, auto get) {
      d.push_back({key, set, get});
    };
    auto size_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [key, get_ref](RunConfig& c, const std::string& v) {
            get_ref(c) = parse_size(key, v);
          },
          [get_ref](const RunConfig& c) {
            return std::to_string(get_ref(const_cast<RunConfig&>(c)));
          });
    };
    auto float_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [key, get_ref](RunConfig& c, const std::string& v) {
            get_ref(c) = parse_float(key, v);
          },
          [get_ref](const RunConfig& c) {
            return fmt_float(get_ref(const_cast<RunConfig&>(c)));
          });
    };
    auto double_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [key, get_ref](RunConfig& c, const std::string& v) {
            get_ref(c) = parse_double(key, v);
          },
          [get_ref](const RunConfig& c) {
            return fmt_double(get_ref(const_cast<RunConfig&>(c)));
          });
    };
    auto int_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [key, get_ref](RunConfig& c, const std::string& v) {
            get_ref(c) = parse_int(key, v);
          },
          [get_ref](const RunConfig& c) {
            return std::to_string(get_ref(const_cast<RunConfig&>(c)));
          });
    };
    auto string_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [get_ref](RunConfig& c, const std::string& v) { get_ref(c) = v; },
          [get_ref](const RunConfig& c) {
            return get_ref(const_cast<RunConfig&>(c));
          });
    };
    auto bool_key = [&](const char* key, auto get_ref) {
      add(
          key,
          [key, get_ref](RunConfig& c, const std::string& v) {
            get_ref(c) = parse_bool(key, v);
          },
          [get_ref](const RunConfig& c) {
            return get_ref(const_cast<RunConfig&>(c)) ? "true" : "false";
          });
    };

    string_key("corpus.path", [](RunConfig& c) -> std::string& { return c.corpus_path; });
    add(
        "task.kind",
        [](RunConfig& c, const std::string& v) {
          try {
            c.task.kind = corpus::task_kind_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'task.kind': ") + e.what());
          }
        },
        [](const RunConfig& c) { return corpus::task_kind_name(c.task.kind); });
    size_key("task.num_labels", [](RunConfig& c) -> size_t& { return c.task.num_labels; });

    size_key("synthetic.num_docs", [](RunConfig& c) -> size_t& { return c.synthetic.num_docs; });
    size_key("synthetic.min_len", [](RunConfig& c) -> size_t& { return c.synthetic.min_len; });
    size_key("synthetic.max_len", [](RunConfig& c) -> size_t& { return c.synthetic.max_len; });
    size_key("synthetic.num_parts", [](RunConfig& c) -> size_t& { return c.synthetic.num_parts; });
    add(
        "synthetic.label_mode",
        [](RunConfig& c, const std::string& v) {
          try {
            c.synthetic.label_mode = corpus::label_mode_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'synthetic.label_mode': ") +
                              e.what());
          }
        },
        [](const RunConfig& c) {
          return corpus::label_mode_name(c.synthetic.label_mode);
        });
    size_key("synthetic.part_len_min", [](RunConfig& c) -> size_t& { return c.synthetic.part_len_min; });
    size_key("synthetic.part_len_max", [](RunConfig& c) -> size_t& { return c.synthetic.part_len_max; });
    size_key("synthetic.tokens_per_part", [](RunConfig& c) -> size_t& { return c.synthetic.tokens_per_part; });
    size_key("synthetic.common_tokens", [](RunConfig& c) -> size_t& { return c.synthetic.common_tokens; });
    double_key("synthetic.common_frac", [](RunConfig& c) -> double& { return c.synthetic.common_frac; });
    int_key("synthetic.informative_part", [](RunConfig& c) -> int& { return c.synthetic.informative_part; });
    string_key("synthetic.informative_position", [](RunConfig& c) -> std::string& { return c.synthetic.informative_position; });
    int_key("synthetic.count_part_a", [](RunConfig& c) -> int& { return c.synthetic.count_part_a; });
    int_key("synthetic.count_part_b", [](RunConfig& c) -> int& { return c.synthetic.count_part_b; });
    double_key("synthetic.count_margin", [](RunConfig& c) -> double& { return c.synthetic.count_margin; });
    int_key("synthetic.cooccur_part_a", [](RunConfig& c) -> int& { return c.synthetic.cooccur_part_a; });
    int_key("synthetic.cooccur_part_b", [](RunConfig& c) -> int& { return c.synthetic.cooccur_part_b; });
    double_key("synthetic.train_frac", [](RunConfig& c) -> double& { return c.synthetic.train_frac; });
    double_key("synthetic.val_frac", [](RunConfig& c) -> double& { return c.synthetic.val_frac; });

    size_key("vocab.max_size", [](RunConfig& c) -> size_t& { return c.vocab_max_size; });
    size_key("vocab.min_freq", [](RunConfig& c) -> size_t& { return c.vocab_min_freq; });

    size_key("chunk.width", [](RunConfig& c) -> size_t& { return c.chunk.width; });
    size_key("chunk.overlap", [](RunConfig& c) -> size_t& { return c.chunk.overlap; });
    size_key("chunk.max_chunks", [](RunConfig& c) -> size_t& { return c.chunk.max_chunks; });

    string_key("backbone.name", [](RunConfig& c) -> std::string& { return c.backbone_name; });
    add(
        "backbone.mode",
        [](RunConfig& c, const std::string& v) {
          try {
            c.backbone.mode = backbone::mode_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'backbone.mode': ") + e.what());
          }
        },
        [](const RunConfig& c) { return backbone::mode_name(c.backbone.mode); });
    size_key("backbone.layers", [](RunConfig& c) -> size_t& { return c.backbone.num_layers; });
    size_key("backbone.d", [](RunConfig& c) -> size_t& { return c.backbone.d; });
    size_key("backbone.heads", [](RunConfig& c) -> size_t& { return c.backbone.heads; });
    size_key("backbone.ffn_dim", [](RunConfig& c) -> size_t& { return c.backbone.ffn_dim; });
    size_key("backbone.extract_layers", [](RunConfig& c) -> size_t& { return c.backbone.extract_layers; });
    size_key("backbone.epochs", [](RunConfig& c) -> size_t& { return c.stage1_epochs; });
    float_key("backbone.lr", [](RunConfig& c) -> float& { return c.stage1_lr; });

    size_key("structure.r", [](RunConfig& c) -> size_t& { return c.structure_r; });
    size_key("structure.min_cluster_size", [](RunConfig& c) -> size_t& { return c.structure_min_cluster_size; });
    size_key("structure.min_samples", [](RunConfig& c) -> size_t& { return c.structure_min_samples; });
    double_key("structure.tolerance", [](RunConfig& c) -> double& { return c.structure_tolerance; });

    size_key("head.p", [](RunConfig& c) -> size_t& { return c.head.p; });
    size_key("head.t", [](RunConfig& c) -> size_t& { return c.head.t; });
    size_key("head.heads", [](RunConfig& c) -> size_t& { return c.head.heads; });
    add(
        "head.combine",
        [](RunConfig& c, const std::string& v) {
          try {
            c.head.combine = head::combine_mode_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'head.combine': ") + e.what());
          }
        },
        [](const RunConfig& c) { return head::combine_mode_name(c.head.combine); });
    bool_key("head.use_structure", [](RunConfig& c) -> bool& { return c.head.use_structure; });
    size_key("head.ffn_t_width", [](RunConfig& c) -> size_t& { return c.head.ffn_t_width; });
    size_key("head.ffn_i_width", [](RunConfig& c) -> size_t& { return c.head.ffn_i_width; });
    add(
        "head.ffn_i_activation",
        [](RunConfig& c, const std::string& v) {
          if (v == "softmax")
            c.head.ffn_i_gelu = false;
          else if (v == "gelu")
            c.head.ffn_i_gelu = true;
          else
            bad_value("head.ffn_i_activation", v, "softmax|gelu");
        },
        [](const RunConfig& c) {
          return std::string(c.head.ffn_i_gelu ? "gelu" : "softmax");
        });
    size_key("head.max_chunks", [](RunConfig& c) -> size_t& { return c.head.max_chunks; });
    size_key("head.epochs", [](RunConfig& c) -> size_t& { return c.head_epochs; });
    float_key("head.lr", [](RunConfig& c) -> float& { return c.head_lr; });
    size_key("head.batch_size", [](RunConfig& c) -> size_t& { return c.head_batch_size; });

    add(
        "loss.wiring",
        [](RunConfig& c, const std::string& v) {
          try {
            c.wiring = loss_wiring_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'loss.wiring': ") + e.what());
          }
        },
        [](const RunConfig& c) { return loss_wiring_name(c.wiring); });
    add(
        "eval.ttest",
        [](RunConfig& c, const std::string& v) {
          try {
            c.ttest = eval::ttest_kind_from_name(v);
          } catch (const std::exception& e) {
            throw ConfigError(std::string("config key 'eval.ttest': ") + e.what());
          }
        },
        [](const RunConfig& c) { return eval::ttest_kind_name(c.ttest); });
    add(
        "eval.min_chunk_filters",
        [](RunConfig& c, const std::string& v) {
          c.min_chunk_filters = parse_size_list("eval.min_chunk_filters", v);
        },
        [](const RunConfig& c) { return fmt_size_list(c.min_chunk_filters); });

    add(
        "ablate.ps",
        [](RunConfig& c, const std::string& v) {
          c.ablate_ps = parse_size_list("ablate.ps", v);
        },
        [](const RunConfig& c) { return fmt_size_list(c.ablate_ps); });
    add(
        "ablate.ts",
        [](RunConfig& c, const std::string& v) {
          c.ablate_ts = parse_size_list("ablate.ts", v);
        },
        [](const RunConfig& c) { return fmt_size_list(c.ablate_ts); });
    add(
        "ablate.structure",
        [](RunConfig& c, const std::string& v) {
          c.ablate_structure = parse_bool_list("ablate.structure", v);
        },
        [](const RunConfig& c) { return fmt_bool_list(c.ablate_structure); });
    size_key("ablate.seeds", [](RunConfig& c) -> size_t& { return c.ablate_num_seeds; });

    add(
        "seed",
        [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });
    string_key("out", [](RunConfig& c) -> std::string& { return c.out_dir; });
    size_key("workers", [](RunConfig& c) -> size_t& { return c.workers; });
    return d;
  }();
  return defs;
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void apply_config_line(RunConfig& cfg, const std::string& key,
                       const std::string& value) {
  for (const auto& def : key_defs()) {
    if (key == def.key) {
      def.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  if (cfg.task.num_labels < 2) fail("task.num_labels: must be >= 2");
  if (cfg.task.kind == corpus::TaskKind::binary && cfg.task.num_labels != 2)
    fail("task.num_labels: binary tasks use exactly 2 labels");

  try {
    cfg.chunk.validate();
  } catch (const std::exception& e) {
    fail(std::string("chunk: ") + e.what());
  }

  const auto& b = cfg.backbone;
  if (b.num_layers == 0) fail("backbone.layers: must be >= 1");
  if (b.d == 0) fail("backbone.d: must be >= 1");
  if (b.heads == 0 || b.d % b.heads != 0)
    fail("backbone.heads: must divide backbone.d");
  if (b.ffn_dim == 0) fail("backbone.ffn_dim: must be >= 1");
  if (b.extract_layers == 0 || b.extract_layers > b.num_layers)
    fail("backbone.extract_layers: must be in [1, backbone.layers]");
  if (cfg.stage1_lr <= 0.0f) fail("backbone.lr: must be positive");

  if (cfg.structure_r == 0) fail("structure.r: must be >= 1");
  if (cfg.structure_min_cluster_size < 2)
    fail("structure.min_cluster_size: must be >= 2");
  if (cfg.structure_min_samples == 0) fail("structure.min_samples: must be >= 1");
  if (cfg.structure_tolerance <= 0.0) fail("structure.tolerance: must be positive");

  const auto& h = cfg.head;
  if (h.p == 0) fail("head.p: must be >= 1");
  if (h.p > b.extract_layers)
    fail("head.p: must be <= backbone.extract_layers (p=" + std::to_string(h.p) +
         ", l=" + std::to_string(b.extract_layers) + ")");
  if (h.t == 0) fail("head.t: must be >= 1");
  const size_t d_f =
      h.combine == head::CombineMode::concat ? h.p * b.d : b.d;
  if (h.heads == 0 || d_f % h.heads != 0)
    fail("head.heads: must divide p*d (concat) or d (add)");
  if (h.ffn_t_width == 0) fail("head.ffn_t_width: must be >= 1");
  if (h.ffn_i_width == 0) fail("head.ffn_i_width: must be >= 1");
  if (h.max_chunks == 0) fail("head.max_chunks: must be >= 1");
  if (cfg.head_lr <= 0.0f) fail("head.lr: must be positive");
  if (cfg.head_batch_size == 0) fail("head.batch_size: must be >= 1");

  if (cfg.vocab_max_size < 4) fail("vocab.max_size: must exceed the 3 specials");
  if (cfg.vocab_min_freq == 0) fail("vocab.min_freq: must be >= 1");

  if (cfg.corpus_path.empty()) {
    const auto& s = cfg.synthetic;
    const int parts = static_cast<int>(s.num_parts);
    if (s.num_docs == 0) fail("synthetic.num_docs: must be >= 1");
    if (s.num_parts < 2) fail("synthetic.num_parts: must be >= 2");
    if (s.min_len == 0 || s.min_len > s.max_len)
      fail("synthetic.min_len: need 1 <= min_len <= max_len");
    if (s.part_len_min == 0 || s.part_len_min > s.part_len_max)
      fail("synthetic.part_len_min: need 1 <= part_len_min <= part_len_max");
    if (s.tokens_per_part == 0) fail("synthetic.tokens_per_part: must be >= 1");
    if (s.common_frac < 0.0 || s.common_frac >= 1.0)
      fail("synthetic.common_frac: must be in [0, 1)");
    if (s.common_frac > 0.0 && s.common_tokens == 0)
      fail("synthetic.common_tokens: must be >= 1 when common_frac > 0");
    if (s.train_frac <= 0.0 || s.val_frac < 0.0 ||
        s.train_frac + s.val_frac >= 1.0)
      fail("synthetic.train_frac: need train_frac > 0, val_frac >= 0, sum < 1");
    switch (s.label_mode) {
      case corpus::LabelMode::motif_presence:
        if (s.informative_part < -1 || s.informative_part >= parts)
          fail("synthetic.informative_part: must be -1 or a valid part index");
        if (s.informative_position != "anywhere" &&
            s.informative_position != "first" && s.informative_position != "last")
          fail("synthetic.informative_position: expected anywhere|first|last");
        break;
      case corpus::LabelMode::part_count_compare:
        if (cfg.task.kind != corpus::TaskKind::binary)
          fail("synthetic.label_mode: part_count_compare requires task.kind = binary");
        if (s.count_part_a < 0 || s.count_part_a >= parts || s.count_part_b < 0 ||
            s.count_part_b >= parts || s.count_part_a == s.count_part_b)
          fail("synthetic.count_part_a: compared parts must be distinct valid indices");
        if (s.count_margin < 0.0 || s.count_margin >= 1.0)
          fail("synthetic.count_margin: must be in [0, 1)");
        break;
      case corpus::LabelMode::part_cooccur:
        if (cfg.task.kind != corpus::TaskKind::binary)
          fail("synthetic.label_mode: part_cooccur requires task.kind = binary");
        if (s.cooccur_part_a < 0 || s.cooccur_part_a >= parts ||
            s.cooccur_part_b < 0 || s.cooccur_part_b >= parts ||
            s.cooccur_part_a == s.cooccur_part_b)
          fail("synthetic.cooccur_part_a: parts must be distinct valid indices");
        break;
    }
  }

  if (cfg.min_chunk_filters.empty()) fail("eval.min_chunk_filters: must be non-empty");
  for (size_t m : cfg.min_chunk_filters)
    if (m == 0) fail("eval.min_chunk_filters: filters must be >= 1");

  if (cfg.ablate_ps.empty()) fail("ablate.ps: must be non-empty");
  for (size_t p : cfg.ablate_ps)
    if (p == 0 || p > b.extract_layers)
      fail("ablate.ps: every p must be in [1, backbone.extract_layers]");
  if (cfg.ablate_ts.empty()) fail("ablate.ts: must be non-empty");
  for (size_t t : cfg.ablate_ts)
    if (t == 0) fail("ablate.ts: every t must be >= 1");
  if (cfg.ablate_structure.empty()) fail("ablate.structure: must be non-empty");
  if (cfg.ablate_num_seeds == 0) fail("ablate.seeds: must be >= 1");
  for (size_t p : cfg.ablate_ps) {
    const size_t df =
        cfg.head.combine == head::CombineMode::concat ? p * b.d : b.d;
    if (df % cfg.head.heads != 0)
      fail("ablate.ps: p=" + std::to_string(p) +
           " makes d_f indivisible by head.heads");
  }

  if (cfg.out_dir.empty()) fail("out: must be non-empty");
  if (cfg.workers == 0) fail("workers: must be >= 1");
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& def : key_defs()) {
    out += def.key;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

uint64_t config_hash(const RunConfig& cfg) {
  // The output directory and worker count never change results (artifacts are
  // byte-deterministic for any worker split), so they stay out of the hash.
  const std::string dump = dump_config(cfg);
  std::string semantic;
  semantic.reserve(dump.size());
  std::istringstream is(dump);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("out =", 0) == 0 || line.rfind("workers =", 0) == 0) continue;
    semantic += line;
    semantic += '\n';
  }
  return fnv1a64(semantic);
}

}  // namespace mesc::pipeline
