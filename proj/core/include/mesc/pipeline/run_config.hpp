#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesc/backbone/backbone.hpp"
#include "mesc/chunker/chunker.hpp"
#include "mesc/corpus/synthetic.hpp"
#include "mesc/eval/ttest.hpp"
#include "mesc/head/head.hpp"
#include "mesc/task_loss.hpp"

namespace mesc::pipeline {

// Configuration / precondition problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One run's full configuration. Parsed from a flat `key = value` file with
// `#` comments; every key has a default, dumped by --print-config.
struct RunConfig {
  // Corpus source: a JSONL path, or empty to generate a synthetic corpus.
  std::string corpus_path;
  corpus::CorpusTask task;
  corpus::SyntheticSpec synthetic;  // task and seed fields are filled from run

  size_t vocab_max_size = 20000;
  size_t vocab_min_freq = 1;

  chunker::ChunkParams chunk{64, 16, 0};

  std::string backbone_name = "mini";
  backbone::BackboneConfig backbone;  // vocab/logit/position widths run-derived
  size_t stage1_epochs = 2;
  float stage1_lr = 3e-4f;

  size_t structure_r = 64;
  size_t structure_min_cluster_size = 15;
  size_t structure_min_samples = 15;
  double structure_tolerance = 1.0;

  head::HeadConfig head;  // d, structure bins and output width run-derived
  size_t head_epochs = 5;
  float head_lr = 3e-4f;
  size_t head_batch_size = 8;

  LossWiring wiring = LossWiring::conventional;
  eval::TTestKind ttest = eval::TTestKind::welch;
  std::vector<size_t> min_chunk_filters{4, 6, 8, 10};

  std::vector<size_t> ablate_ps{1, 2, 4};
  std::vector<size_t> ablate_ts{1, 2, 3};
  std::vector<bool> ablate_structure{false, true};
  size_t ablate_num_seeds = 3;

  uint64_t seed = 1;
  std::string out_dir = "run_out";
  size_t workers = 1;
};

RunConfig default_config();

// Throws ConfigError naming the offending key on unknown keys or bad values.
RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key,
                       const std::string& value);

// Cross-field checks (chunk window, backbone shape, p <= l, task arity, ...).
void validate_config(const RunConfig& cfg);

// Canonical dump: every key in fixed order, normalized values. Reparsing the
// dump reproduces the config; the run hash is taken over this text.
std::string dump_config(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

}  // namespace mesc::pipeline
