#include "mesc/pipeline/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mesc/io_util.hpp"
#include "mesc/rng.hpp"

namespace mesc::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFile = "manifest.json";

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t from_hex64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Hash of the canonical config lines whose keys match any prefix, chained with
// the upstream hash and a stage salt.
uint64_t subset_hash(const RunConfig& cfg,
                     std::initializer_list<const char*> prefixes, uint64_t chain,
                     const std::string& salt) {
  std::string acc = salt + ":" + hex64(chain) + "\n";
  std::istringstream is(dump_config(cfg));
  std::string line;
  while (std::getline(is, line)) {
    for (const char* p : prefixes) {
      if (line.rfind(p, 0) == 0) {
        acc += line;
        acc += '\n';
        break;
      }
    }
  }
  return fnv1a64(acc);
}

}  // namespace

RunManifest load_manifest(const std::string& out_dir) {
  RunManifest manifest;
  const fs::path path = fs::path(out_dir) / kManifestFile;
  std::ifstream is(path);
  if (!is) return manifest;
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ConfigError("corrupt manifest at " + path.string() + ": " + e.what());
  }
  manifest.config_hash = from_hex64(j.value("config_hash", "0"));
  if (j.contains("stages")) {
    for (const auto& [name, sj] : j.at("stages").items()) {
      StageRecord rec;
      rec.done = sj.value("done", false);
      rec.dep_hash = from_hex64(sj.value("dep_hash", "0"));
      rec.timestamp = sj.value("timestamp", "");
      if (sj.contains("artifacts"))
        for (const auto& [k, v] : sj.at("artifacts").items())
          rec.artifacts[k] = v.get<std::string>();
      manifest.stages[name] = std::move(rec);
    }
  }
  return manifest;
}

void save_manifest(const RunManifest& manifest, const std::string& out_dir) {
  ordered_json j;
  j["config_hash"] = hex64(manifest.config_hash);
  ordered_json stages = ordered_json::object();
  for (const auto& [name, rec] : manifest.stages) {
    ordered_json sj;
    sj["done"] = rec.done;
    sj["dep_hash"] = hex64(rec.dep_hash);
    sj["timestamp"] = rec.timestamp;
    ordered_json arts = ordered_json::object();
    for (const auto& [k, v] : rec.artifacts) arts[k] = v;
    sj["artifacts"] = arts;
    stages[name] = sj;
  }
  j["stages"] = stages;
  const fs::path path = fs::path(out_dir) / kManifestFile;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest: " + path.string());
  os << j.dump(2) << '\n';
}

uint64_t prepare_corpus_hash(const RunConfig& cfg) {
  uint64_t chain = derive_seed(cfg.seed, "synthetic");
  if (!cfg.corpus_path.empty()) {
    try {
      chain ^= hash_file(cfg.corpus_path);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("corpus.path: ") + e.what());
    }
  }
  return subset_hash(cfg, {"corpus.path", "task.", "synthetic.", "vocab."}, chain,
                     "prepare_corpus");
}

uint64_t prepare_chunks_hash(const RunConfig& cfg) {
  return subset_hash(cfg, {"chunk."}, prepare_corpus_hash(cfg), "prepare_chunks");
}

uint64_t stage1_hash(const RunConfig& cfg) {
  const uint64_t chain =
      prepare_chunks_hash(cfg) ^ derive_seed(cfg.seed, "stage1");
  return subset_hash(cfg, {"backbone.", "loss."}, chain, "stage1");
}

uint64_t stage2_hash(const RunConfig& cfg) {
  return subset_hash(cfg, {}, stage1_hash(cfg), "stage2");
}

uint64_t stage3_hash(const RunConfig& cfg) {
  const std::string extra = "stage3:p=" + std::to_string(cfg.head.p) +
                            ":combine=" + head::combine_mode_name(cfg.head.combine);
  return subset_hash(cfg, {"structure."}, stage2_hash(cfg), extra);
}

uint64_t train_head_hash(const RunConfig& cfg) {
  uint64_t chain = stage2_hash(cfg) ^ derive_seed(cfg.seed, "head");
  if (cfg.head.use_structure) chain ^= stage3_hash(cfg);
  return subset_hash(cfg, {"head.", "loss."}, chain, "train_head");
}

uint64_t ablate_hash(const RunConfig& cfg) {
  const uint64_t chain = stage2_hash(cfg) ^ derive_seed(cfg.seed, "ablate");
  return subset_hash(cfg, {"ablate.", "head.", "structure.", "loss.", "eval.ttest"},
                     chain, "ablate");
}

void record_stage(RunManifest& manifest, const std::string& out_dir,
                  const std::string& stage, uint64_t dep_hash,
                  const std::map<std::string, std::string>& artifacts) {
  for (const auto& [name, rel] : artifacts) {
    const fs::path path = fs::path(out_dir) / rel;
    if (!fs::exists(path))
      throw std::runtime_error("stage '" + stage + "' finished but artifact '" +
                               name + "' is missing: " + path.string());
  }
  StageRecord rec;
  rec.done = true;
  rec.dep_hash = dep_hash;
  rec.artifacts = artifacts;
  rec.timestamp = utc_now();
  manifest.stages[stage] = std::move(rec);
}

bool stage_current(const RunManifest& manifest, const std::string& out_dir,
                   const std::string& stage, uint64_t expected_hash) {
  const auto it = manifest.stages.find(stage);
  if (it == manifest.stages.end() || !it->second.done) return false;
  if (it->second.dep_hash != expected_hash) return false;
  for (const auto& [name, rel] : it->second.artifacts)
    if (!fs::exists(fs::path(out_dir) / rel)) return false;
  return true;
}

void require_stage(const RunManifest& manifest, const std::string& out_dir,
                   const std::string& stage, uint64_t expected_hash) {
  const auto it = manifest.stages.find(stage);
  if (it == manifest.stages.end() || !it->second.done)
    throw ConfigError("prerequisite step '" + stage +
                      "' has not run; run it first");
  if (it->second.dep_hash != expected_hash)
    throw ConfigError("artifacts of step '" + stage +
                      "' were built from a different config; rerun it");
  for (const auto& [name, rel] : it->second.artifacts) {
    const fs::path path = fs::path(out_dir) / rel;
    if (!fs::exists(path))
      throw ConfigError("prerequisite artifact '" + name + "' of step '" + stage +
                        "' is missing: " + path.string());
  }
}

}  // namespace mesc::pipeline
