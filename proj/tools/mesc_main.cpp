#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mesc/pipeline/run_config.hpp"
#include "mesc/pipeline/stages.hpp"

namespace {

struct Command {
  const char* name;
  const char* help;
  void (*fn)(const mesc::pipeline::RunConfig&);
};

constexpr Command kCommands[] = {
    {"prepare", "generate or load the corpus, build the vocabulary, write the chunk histogram",
     mesc::pipeline::cmd_prepare},
    {"stage1", "fine-tune the backbone on per-document chunk batches",
     mesc::pipeline::cmd_stage1},
    {"stage2", "extract per-chunk layer embeddings from the fine-tuned backbone",
     mesc::pipeline::cmd_stage2},
    {"stage3", "fit the reduction + clustering and label every chunk",
     mesc::pipeline::cmd_stage3},
    {"train-head", "train the inter-chunk classifier head",
     mesc::pipeline::cmd_train_head},
    {"eval", "score the trained head on val/test and write metrics.json",
     mesc::pipeline::cmd_eval},
    {"ablate", "run the p x t x structure x seed grid and write ablation.csv",
     mesc::pipeline::cmd_ablate},
    {"analyze-chunks", "per-chunk-position vs whole-pipeline micro-F1 study",
     mesc::pipeline::cmd_analyze_chunks},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mesc: staged hierarchical long-document classification pipeline"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool print_config = false;

  app.add_option("--config", config_path, "run configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  auto* out_opt = app.add_option("--out", out_dir, "output directory override");
  app.add_flag("--print-config", print_config,
               "print the effective configuration and exit");

  std::vector<CLI::App*> subs;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->fallthrough();  // allow the global flags after the subcommand too
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    mesc::pipeline::RunConfig cfg = config_path.empty()
                                        ? mesc::pipeline::default_config()
                                        : mesc::pipeline::parse_config_file(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.out_dir = out_dir;

    if (print_config) {
      std::cout << mesc::pipeline::dump_config(cfg);
      return 0;
    }

    for (size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) {
        kCommands[i].fn(cfg);
        return 0;
      }
    }
    std::cerr << "error: no subcommand given; expected one of";
    for (const auto& c : kCommands) std::cerr << " " << c.name;
    std::cerr << "\n";
    return 2;
  } catch (const mesc::pipeline::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
