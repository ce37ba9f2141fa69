#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "mesc/pipeline/run_config.hpp"
#include "support/test_util.hpp"

#ifndef MESC_CLI_PATH
#error "MESC_CLI_PATH must point at the mesc binary"
#endif

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string("\"") + MESC_CLI_PATH + "\" " + args +
                          (keep_stderr ? " 2>&1" : " 2>/dev/null");
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string tiny_config_file(const mesc::test::TempDir& tmp) {
  const auto path = tmp.file("tiny.cfg");
  std::ofstream os(path);
  os << "task.kind = binary\n"
        "synthetic.num_docs = 6\n"
        "synthetic.min_len = 60\n"
        "synthetic.max_len = 120\n"
        "chunk.width = 24\n"
        "chunk.overlap = 6\n"
        "backbone.layers = 1\n"
        "backbone.d = 16\n"
        "backbone.heads = 2\n"
        "backbone.ffn_dim = 32\n"
        "backbone.extract_layers = 1\n"
        "backbone.epochs = 1\n"
        "head.p = 1\n"
        "head.t = 1\n"
        "head.heads = 2\n"
        "seed = 3\n";
  return path;
}

}  // namespace

TEST_CASE("help exits cleanly and lists the subcommands") {
  auto res = run_cli("--help", true);
  CHECK(res.exit_code == 0);
  for (const char* sub : {"prepare", "stage1", "stage2", "stage3", "train-head",
                          "eval", "ablate", "analyze-chunks"})
    CHECK_MESSAGE(res.out.find(sub) != std::string::npos, sub);
}

TEST_CASE("missing subcommand and unknown flags are usage errors") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("--bogus").exit_code == 2);
  CHECK(run_cli("prepare --bogus").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("print-config emits a reparseable dump and exits 0") {
  mesc::test::TempDir tmp("cli");
  auto res = run_cli("prepare --print-config --seed 123");
  CHECK(res.exit_code == 0);
  const auto dump_path = tmp.file("dump.cfg");
  {
    std::ofstream os(dump_path);
    os << res.out;
  }
  auto cfg = mesc::pipeline::parse_config_file(dump_path);
  CHECK(cfg.seed == 123);
  CHECK(mesc::pipeline::dump_config(cfg) == res.out);
}

TEST_CASE("config problems exit with code 2") {
  mesc::test::TempDir tmp("clibad");
  const auto bad = tmp.file("bad.cfg");
  {
    std::ofstream os(bad);
    os << "mystery_key = 1\n";
  }
  auto res = run_cli("prepare --config \"" + bad + "\"", true);
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("mystery_key") != std::string::npos);
  // nonexistent config file is caught by option validation
  CHECK(run_cli("prepare --config /does/not/exist.cfg").exit_code == 2);
}

TEST_CASE("stage ordering violations exit with code 2") {
  mesc::test::TempDir tmp("cliorder");
  const auto cfg = tiny_config_file(tmp);
  const auto out = tmp.file("run");
  auto res = run_cli("stage2 --config \"" + cfg + "\" --out \"" + out + "\"", true);
  CHECK(res.exit_code == 2);
  CHECK(res.out.find("prerequisite") != std::string::npos);
}

TEST_CASE("prepare runs from the CLI and is re-runnable") {
  mesc::test::TempDir tmp("cliprep");
  const auto cfg = tiny_config_file(tmp);
  const auto out = tmp.file("run");
  auto first = run_cli("prepare --config \"" + cfg + "\" --out \"" + out + "\"", true);
  CHECK(first.exit_code == 0);
  CHECK(std::ifstream(out + "/corpus.jsonl").good());
  auto second = run_cli("prepare --config \"" + cfg + "\" --out \"" + out + "\"", true);
  CHECK(second.exit_code == 0);
}
