// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "viewvote/eval.hpp"
#include "viewvote/pointcloud.hpp"
#include "viewvote/segmenter.hpp"
#include "viewvote/viewgen.hpp"
#include "viewvote/voting.hpp"

namespace viewvote::pipeline {

/// All pipeline knobs, parsed from a flat dotted-key config file
/// (`section.key = value` lines, '#' comments). Unknown keys are rejected.
struct PipelineConfig {
  // paths (relative entries resolve against the config file's directory)
  std::filesystem::path scans_dir = "data/scans";
  std::filesystem::path poses_file = "data/poses.txt";
  std::filesystem::path labels_dir;   // empty = no ground truth
  std::filesystem::path classes_file; // empty = no class names
  std::filesystem::path work_dir = "work";

  bool synth_enabled = false;
  uint64_t synth_seed = 0;

  cloud::IntensityParams intensity;

  view::PoseNoiseParams noise;  // K, theta, lambda, gamma, seed
  int camera_width = 1024;
  int camera_height = 512;
  std::optional<double> camera_focal;  // default: width / 2
  std::optional<double> camera_cx;     // default: width / 2
  std::optional<double> camera_cy;     // default: height / 2
  int splat_radius = 1;
  double d_min = 1.0;
  double d_max = 30.0;

  std::string segmenter_kind = "oracle";  // oracle | external
  seg::OracleParams oracle;
  std::filesystem::path external_results_dir;  // default: <work>/seg

  vote::Estimator estimator = vote::Estimator::hard_sum;
  vote::VoteParams vote_params;

  eval::EvalConfig eval_cfg;  // class_merge filled from merge_names at eval
  std::vector<std::pair<std::string, std::string>> merge_names;

  int workers = 1;

  view::CameraIntrinsics intrinsics() const {
    view::CameraIntrinsics c;
    c.width = camera_width;
    c.height = camera_height;
    c.focal = camera_focal.value_or(camera_width / 2.0);
    c.cx = camera_cx.value_or(camera_width / 2.0);
    c.cy = camera_cy.value_or(camera_height / 2.0);
    return c;
  }

  void validate() const;
};

/// Parses config text; `origin` names the source in errors, and relative
/// paths resolve against `base_dir`.
PipelineConfig parse_config_text(const std::string& text,
                                 const std::string& origin,
                                 const std::filesystem::path& base_dir);

PipelineConfig parse_config_file(const std::filesystem::path& path);

}  // namespace viewvote::pipeline
