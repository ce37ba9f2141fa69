#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mesc/pipeline/run_config.hpp"

namespace mesc::pipeline {

// Completion record for one pipeline step. dep_hash captures every config
// field (and upstream hash) the step depends on; a mismatch after a config
// change marks the stored artifacts stale.
struct StageRecord {
  bool done = false;
  uint64_t dep_hash = 0;
  std::map<std::string, std::string> artifacts;  // name -> path inside out dir
  std::string timestamp;                         // informational only
};

struct RunManifest {
  uint64_t config_hash = 0;
  std::map<std::string, StageRecord> stages;
};

// manifest.json in the run directory; a missing file is an empty manifest.
RunManifest load_manifest(const std::string& out_dir);
void save_manifest(const RunManifest& manifest, const std::string& out_dir);

// Dependency hashes, chained so an upstream change invalidates downstream
// stages. prepare_corpus_hash folds in the input file bytes for external
// corpora.
uint64_t prepare_corpus_hash(const RunConfig& cfg);
uint64_t prepare_chunks_hash(const RunConfig& cfg);
uint64_t stage1_hash(const RunConfig& cfg);
uint64_t stage2_hash(const RunConfig& cfg);
uint64_t stage3_hash(const RunConfig& cfg);
uint64_t train_head_hash(const RunConfig& cfg);
uint64_t ablate_hash(const RunConfig& cfg);

// Marks a step complete: stamps the hash, records artifacts, refreshes the
// timestamp, and verifies each artifact file exists.
void record_stage(RunManifest& manifest, const std::string& out_dir,
                  const std::string& stage, uint64_t dep_hash,
                  const std::map<std::string, std::string>& artifacts);

// Throws ConfigError when the step has not run, ran under a different config,
// or any recorded artifact no longer exists — naming what is missing.
void require_stage(const RunManifest& manifest, const std::string& out_dir,
                   const std::string& stage, uint64_t expected_hash);

// True when the step is current: done, hash match, artifacts on disk.
bool stage_current(const RunManifest& manifest, const std::string& out_dir,
                   const std::string& stage, uint64_t expected_hash);

}  // namespace mesc::pipeline
