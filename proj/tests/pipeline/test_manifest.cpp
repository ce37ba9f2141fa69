#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mesc/pipeline/manifest.hpp"
#include "support/test_util.hpp"

using namespace mesc;
using namespace mesc::pipeline;

namespace {

std::string touch(const mesc::test::TempDir& tmp, const std::string& name) {
  std::ofstream os(tmp.file(name));
  os << "data\n";
  return name;
}

}  // namespace

TEST_CASE("manifests round-trip through json and start empty") {
  mesc::test::TempDir tmp("manifest");
  RunManifest empty = load_manifest(tmp.path());
  CHECK(empty.stages.empty());

  RunManifest m;
  m.config_hash = 0xdeadbeef;
  touch(tmp, "a.bin");
  record_stage(m, tmp.path(), "stage1", 42, {{"model", "a.bin"}});
  save_manifest(m, tmp.path());
  CHECK(std::filesystem::exists(tmp.file("manifest.json")));

  RunManifest r = load_manifest(tmp.path());
  CHECK(r.config_hash == 0xdeadbeef);
  REQUIRE(r.stages.count("stage1") == 1);
  CHECK(r.stages["stage1"].done);
  CHECK(r.stages["stage1"].dep_hash == 42);
  CHECK(r.stages["stage1"].artifacts.at("model") == "a.bin");
  CHECK(!r.stages["stage1"].timestamp.empty());
}

TEST_CASE("recording verifies artifacts exist") {
  mesc::test::TempDir tmp("record");
  RunManifest m;
  CHECK_THROWS(record_stage(m, tmp.path(), "stage1", 1, {{"model", "ghost.bin"}}));
  touch(tmp, "real.bin");
  CHECK_NOTHROW(record_stage(m, tmp.path(), "stage1", 1, {{"model", "real.bin"}}));
}

TEST_CASE("require_stage distinguishes missing, stale and broken steps") {
  mesc::test::TempDir tmp("require");
  RunManifest m;
  // never ran
  CHECK_THROWS_WITH_AS(require_stage(m, tmp.path(), "stage2", 7),
                       doctest::Contains("stage2"), ConfigError);

  touch(tmp, "emb.bin");
  record_stage(m, tmp.path(), "stage2", 7, {{"store", "emb.bin"}});
  CHECK_NOTHROW(require_stage(m, tmp.path(), "stage2", 7));
  CHECK(stage_current(m, tmp.path(), "stage2", 7));

  // config changed upstream: hash mismatch
  CHECK_THROWS_AS(require_stage(m, tmp.path(), "stage2", 8), ConfigError);
  CHECK_FALSE(stage_current(m, tmp.path(), "stage2", 8));

  // artifact deleted behind our back
  std::filesystem::remove(tmp.file("emb.bin"));
  CHECK_THROWS_WITH_AS(require_stage(m, tmp.path(), "stage2", 7),
                       doctest::Contains("emb.bin"), ConfigError);
  CHECK_FALSE(stage_current(m, tmp.path(), "stage2", 7));
}

TEST_CASE("dependency hashes chain through the pipeline") {
  RunConfig base = default_config();

  // chunk width feeds chunking but not corpus generation
  RunConfig chunks = base;
  chunks.chunk.width = base.chunk.width * 2;
  CHECK(prepare_corpus_hash(chunks) == prepare_corpus_hash(base));
  CHECK(prepare_chunks_hash(chunks) != prepare_chunks_hash(base));
  CHECK(stage1_hash(chunks) != stage1_hash(base));
  CHECK(stage2_hash(chunks) != stage2_hash(base));

  // stage-1 epochs feed training but not data preparation
  RunConfig epochs = base;
  epochs.stage1_epochs += 1;
  CHECK(prepare_corpus_hash(epochs) == prepare_corpus_hash(base));
  CHECK(prepare_chunks_hash(epochs) == prepare_chunks_hash(base));
  CHECK(stage1_hash(epochs) != stage1_hash(base));
  CHECK(stage2_hash(epochs) != stage2_hash(base));
  CHECK(stage3_hash(epochs) != stage3_hash(base));
  CHECK(train_head_hash(epochs) != train_head_hash(base));

  // clustering knobs feed stage 3 but not stage 2
  RunConfig cluster = base;
  cluster.structure_min_cluster_size += 1;
  CHECK(stage2_hash(cluster) == stage2_hash(base));
  CHECK(stage3_hash(cluster) != stage3_hash(base));

  // head hyper-parameters only matter from head training on
  RunConfig headcfg = base;
  headcfg.head_epochs += 1;
  CHECK(stage3_hash(headcfg) == stage3_hash(base));
  CHECK(train_head_hash(headcfg) != train_head_hash(base));

  // ablation grid feeds only the ablation step
  RunConfig grid = base;
  grid.ablate_num_seeds += 1;
  CHECK(train_head_hash(grid) == train_head_hash(base));
  CHECK(ablate_hash(grid) != ablate_hash(base));

  // output directory and workers never touch any dependency hash
  RunConfig moved = base;
  moved.out_dir = "elsewhere";
  moved.workers = 9;
  CHECK(prepare_corpus_hash(moved) == prepare_corpus_hash(base));
  CHECK(stage1_hash(moved) == stage1_hash(base));
  CHECK(stage2_hash(moved) == stage2_hash(base));
  CHECK(stage3_hash(moved) == stage3_hash(base));
  CHECK(train_head_hash(moved) == train_head_hash(base));
  CHECK(ablate_hash(moved) == ablate_hash(base));
}

TEST_CASE("external corpus bytes feed the corpus hash") {
  mesc::test::TempDir tmp("extcorpus");
  const auto path = tmp.file("c.jsonl");
  {
    std::ofstream os(path);
    os << R"({"id":"a","text":"hello world","labels":[1],"split":"train"})" << "\n";
  }
  RunConfig cfg = default_config();
  cfg.corpus_path = path;
  const uint64_t h1 = prepare_corpus_hash(cfg);
  {
    std::ofstream os(path, std::ios::app);
    os << R"({"id":"b","text":"more text","labels":[0],"split":"val"})" << "\n";
  }
  CHECK(prepare_corpus_hash(cfg) != h1);
}

TEST_CASE("corrupt manifests are rejected") {
  mesc::test::TempDir tmp("badmanifest");
  {
    std::ofstream os(tmp.file("manifest.json"));
    os << "{ not json";
  }
  CHECK_THROWS(load_manifest(tmp.path()));
}
