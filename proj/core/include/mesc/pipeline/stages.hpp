#pragma once

#include "mesc/pipeline/run_config.hpp"

namespace mesc::pipeline {

// One pipeline subcommand each. Every command validates the config, checks its
// prerequisites against the run manifest in cfg.out_dir, writes its artifacts
// there, and records completion. Config and precondition problems throw
// ConfigError (CLI exit 2); other failures propagate (exit 1).
void cmd_prepare(const RunConfig& cfg);
void cmd_stage1(const RunConfig& cfg);
void cmd_stage2(const RunConfig& cfg);
void cmd_stage3(const RunConfig& cfg);
void cmd_train_head(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);
void cmd_analyze_chunks(const RunConfig& cfg);

}  // namespace mesc::pipeline
