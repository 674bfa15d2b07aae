// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "viewvote/segmenter.hpp"
#include "viewvote/viewgen.hpp"

namespace viewvote::vote {

/// Election rule applied to a point's accumulated votes.
enum class Estimator {
  hard_sum,      // argmax of per-class vote counts
  soft_sum,      // argmax of summed logits
  soft_compound  // argmax of compounded per-view scores
};

Estimator parse_estimator(const std::string& name);
std::string to_string(Estimator e);

/// How the compound accumulator combines per-view scores. log_softmax is the
/// numerically sane default; raw_product multiplies raw logits and is kept
/// for ablation of the degenerate behaviour it produces.
enum class CompoundMode { log_softmax, raw_product };

CompoundMode parse_compound_mode(const std::string& name);
std::string to_string(CompoundMode m);

struct VoteParams {
  CompoundMode compound_mode = CompoundMode::log_softmax;
  double softmax_floor = 1e-6;
  bool dedup_per_view = false;  // count each (point, view) pair at most once
};

/// One view's votes: for every non-empty pixel in row-major order, the
/// winning point, the pixel's label, and its logit row.
struct ViewContributions {
  int view_index = 0;
  int num_classes = 0;
  std::vector<uint32_t> points;
  std::vector<uint16_t> labels;
  std::vector<float> logits;  // size() * num_classes

  std::size_t size() const { return points.size(); }
};

/// Maps a segmented view back onto the cloud: one contribution per non-empty
/// pixel. Throws on view/result dimension mismatch.
ViewContributions backproject(const view::RenderedView& view,
                              const seg::SegmentationResult& result);

/// Final labels for every point; kUnlabeled where no vote arrived.
struct PointLabels {
  std::vector<uint16_t> labels;
  Estimator estimator_used = Estimator::hard_sum;
};

/// Per-point accumulators for the election estimators.
///
/// Soft accumulation is order-sensitive in floating point, so views must be
/// accumulated in ascending view_index order (backproject already emits
/// pixels row-major); the table enforces the ordering.
class VoteTable {
 public:
  VoteTable(std::size_t num_points, int num_classes, VoteParams params = {});

  void accumulate(const ViewContributions& contrib);
  PointLabels elect(Estimator estimator) const;

  std::size_t num_points() const { return num_points_; }
  int num_classes() const { return num_classes_; }
  const VoteParams& params() const { return params_; }

  uint32_t hard_count(std::size_t point, int cls) const {
    return hard_counts_[point * num_classes_ + cls];
  }
  double logit_sum(std::size_t point, int cls) const {
    return logit_sums_[point * num_classes_ + cls];
  }
  double compound(std::size_t point, int cls) const {
    return compound_[point * num_classes_ + cls];
  }
  uint32_t vote_count(std::size_t point) const { return vote_count_[point]; }

  /// Checks the table invariants (row sums, zero-vote rows all-zero).
  void validate() const;

  void save(const std::filesystem::path& path) const;
  static VoteTable load(const std::filesystem::path& path);

 private:
  std::size_t num_points_;
  int num_classes_;
  VoteParams params_;
  std::vector<uint32_t> hard_counts_;
  std::vector<double> logit_sums_;
  std::vector<double> compound_;
  std::vector<uint32_t> vote_count_;
  std::vector<uint32_t> view_stamp_;  // dedup bookkeeping
  int last_view_index_ = -1;
};

/// Pseudo-label file: one little-endian uint16 per point in cloud order,
/// 65535 = unlabeled.
void save_point_labels(const std::filesystem::path& path,
                       const std::vector<uint16_t>& labels);
std::vector<uint16_t> load_point_labels(const std::filesystem::path& path);

}  // namespace viewvote::vote
