// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "viewvote/types.hpp"

namespace viewvote::eval {

/// What to do with points that received no pseudo-label.
enum class UnlabeledPolicy {
  count_as_wrong,  // a sentinel prediction is a miss for its gt class
  exclude          // drop the point from the confusion counts
};

UnlabeledPolicy parse_unlabeled_policy(const std::string& name);
std::string to_string(UnlabeledPolicy p);

struct EvalConfig {
  double lateral_crop = 30.0;  // meters, horizontal radius around trajectory
  double height_crop = 10.0;   // meters above the nearest trajectory pose
  std::vector<std::pair<uint16_t, uint16_t>> class_merge;  // from -> to
  UnlabeledPolicy unlabeled_policy = UnlabeledPolicy::count_as_wrong;

  void validate() const {
    if (lateral_crop <= 0.0 || height_crop <= 0.0)
      throw InvalidArgumentError("eval: crops must be > 0");
  }
};

struct EvalReport {
  std::map<uint16_t, double> iou_per_class;  // classes present in gt only
  double miou = 0.0;
  double coverage = 0.0;       // evaluated points with a non-sentinel label
  std::size_t evaluated_points = 0;  // points with non-sentinel ground truth
};

/// True for points within lateral_crop horizontal meters of the nearest
/// trajectory position (nearest measured horizontally, world XY plane) and
/// no more than height_crop meters above that position (world Z up).
std::vector<bool> crop_mask(const DensePointCloud& cloud,
                            const std::vector<Pose>& trajectory,
                            const EvalConfig& cfg);

/// Applies a from->to class mapping in a single pass (no transitive
/// resolution); sentinels pass through unchanged. Throws if a mapping class
/// is >= num_classes.
std::vector<uint16_t> merge_classes(
    std::span<const uint16_t> labels,
    const std::vector<std::pair<uint16_t, uint16_t>>& mapping,
    std::size_t num_classes);

/// Per-class IoU and mIoU over points with non-sentinel ground truth.
/// Classes absent from the ground truth are omitted.
EvalReport compute_iou(std::span<const uint16_t> pred,
                       std::span<const uint16_t> gt, std::size_t num_classes,
                       UnlabeledPolicy policy);

/// Report serialization: key/value text, JSON, and per-class CSV.
std::string report_text(const EvalReport& report,
                        const std::vector<std::string>& class_names);
void save_report_json(const std::filesystem::path& path,
                      const EvalReport& report,
                      const std::vector<std::string>& class_names);
void save_report_csv(const std::filesystem::path& path,
                     const EvalReport& report,
                     const std::vector<std::string>& class_names);

}  // namespace viewvote::eval
