// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "viewvote/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  bool force = false;
  int workers = 0;                 // 0 = use config
  std::string estimator;           // empty = use config
  long long seed_override = -1;    // -1 = use config
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "pipeline config file")
      ->required();
  cmd->add_flag("--force", args.force, "recompute cached stage outputs");
  cmd->add_option("--workers", args.workers, "worker thread count override");
  cmd->add_option("--estimator", args.estimator,
                  "election estimator override "
                  "(hard_sum|soft_sum|soft_compound)");
  cmd->add_option("--seed-override", args.seed_override,
                  "replaces views.seed and derives oracle.seed");
}

viewvote::pipeline::Pipeline make_pipeline(const CommonArgs& args,
                                            bool force_synth) {
  auto cfg = viewvote::pipeline::parse_config_file(args.config_path);
  if (force_synth) cfg.synth_enabled = true;
  viewvote::pipeline::RunOptions opts;
  opts.force = args.force;
  if (args.workers > 0) opts.workers = args.workers;
  if (!args.estimator.empty())
    opts.estimator = viewvote::vote::parse_estimator(args.estimator);
  if (args.seed_override >= 0)
    opts.seed_override = static_cast<uint64_t>(args.seed_override);
  return viewvote::pipeline::Pipeline(std::move(cfg), opts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "viewvote - 3D pseudo-labels from voted 2D views of LiDAR sequences"};
  app.require_subcommand(1);

  CommonArgs args;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "generate the synthetic scene configured under synth.*"},
      {"align", "align scans into the dense world-frame cloud"},
      {"render", "sample virtual poses and render greyscale views"},
      {"segment", "run the oracle segmenter / validate external results"},
      {"vote", "back-project, accumulate votes and elect pseudo-labels"},
      {"eval", "compare pseudo-labels against ground truth"},
      {"run", "full pipeline (align through eval)"},
  };
  for (const Sub& s : subs) add_common(app.add_subcommand(s.name, s.help), args);

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    auto pipeline = make_pipeline(args, stage == "synth");
    if (stage == "synth")
      pipeline.synth();
    else if (stage == "align")
      pipeline.align();
    else if (stage == "render")
      pipeline.render();
    else if (stage == "segment")
      pipeline.segment();
    else if (stage == "vote")
      pipeline.vote();
    else if (stage == "eval")
      pipeline.eval();
    else
      pipeline.run();
  } catch (const viewvote::PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: [" << stage << "] " << e.what() << "\n";
    return 1;
  }
  return 0;
}
