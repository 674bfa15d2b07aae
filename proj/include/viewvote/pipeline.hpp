// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>

#include "viewvote/config.hpp"

namespace viewvote::pipeline {

/// Binary cache format for the aligned cloud (work/cloud/cloud.bin).
void save_cloud(const std::filesystem::path& path,
                const DensePointCloud& cloud);
DensePointCloud load_cloud(const std::filesystem::path& path);

struct RunOptions {
  bool force = false;  // recompute every stage touched by this invocation
  std::optional<int> workers;
  std::optional<uint64_t> seed_override;  // replaces views.seed + oracle.seed
  std::optional<vote::Estimator> estimator;
};

/// Batch orchestrator. Every stage writes its outputs plus a manifest under
/// the work directory and is skipped on re-runs while its input key (a hash
/// of the stage parameters and all upstream keys) is unchanged. Invoking a
/// stage first ensures its upstream stages the same way, so each subcommand
/// is runnable standalone.
///
/// Work directory layout:
///   cloud/    aligned cloud cache
///   views/    virtual_poses.txt + view_%06d.{png,meta,idx,depth}
///   seg/      labels_%06d.png [+ logits_%06d.bin] + RESULTS_READY
///   votes/    votes.bin (estimator-independent accumulators)
///   labels/   pseudo_labels_<estimator>.bin + summary_<estimator>.json
///   report.json / report.txt / report.csv
class Pipeline {
 public:
  Pipeline(PipelineConfig config, RunOptions options = {});

  // Stages; each returns its cache key.
  std::string synth();
  std::string align();
  std::string render();
  std::string segment();
  std::string vote();
  std::string eval();

  /// Full chain; evaluation runs only when ground truth is present.
  void run();

  const PipelineConfig& config() const { return config_; }

  std::filesystem::path cloud_file() const;
  std::filesystem::path views_dir() const;
  std::filesystem::path seg_dir() const;
  std::filesystem::path labels_file() const;
  std::filesystem::path summary_file() const;
  std::filesystem::path report_json_file() const;

 private:
  std::string synth_impl();
  std::string align_impl();
  std::string render_impl();
  std::string segment_impl();
  std::string vote_impl();
  std::string eval_impl();

  template <typename Fn>
  std::string run_stage(const char* name, Fn&& fn);

  std::string input_content_key() const;

  PipelineConfig config_;
  RunOptions options_;
  bool quiet_ = false;
  std::map<std::string, std::string> stage_keys_;  // memo per invocation

 public:
  /// Silences per-stage progress lines (tests).
  void set_quiet(bool q) { quiet_ = q; }
};

}  // namespace viewvote::pipeline
