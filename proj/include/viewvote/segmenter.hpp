// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "viewvote/viewgen.hpp"

namespace viewvote::seg {

/// Per-pixel labels and logits for one view. labels[u,v] is always the
/// argmax of logits[u,v,:] with ties broken toward the lowest class index.
struct SegmentationResult {
  int width = 0;
  int height = 0;
  int num_classes = 0;
  Image<uint16_t> labels;
  std::vector<float> logits;  // row-major [height][width][num_classes]

  const float* logit_row(int u, int v) const {
    return logits.data() +
           (static_cast<std::size_t>(v) * width + u) * num_classes;
  }

  /// Argmax with lowest-index tie break.
  static int argmax(const float* row, int n) {
    int best = 0;
    for (int c = 1; c < n; ++c)
      if (row[c] > row[best]) best = c;
    return best;
  }

  /// Checks dimensions against the view plus the argmax and finiteness
  /// invariants. Throws SegmentationError on violation.
  void validate_against(const view::RenderedView& view) const;
};

/// Interface for 2D semantic segmentation backends. Implementations must be
/// safe for concurrent segment() calls on distinct views.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentationResult segment(const view::RenderedView& view,
                                     int num_classes) const = 0;
};

struct OracleParams {
  double flip_rate = 0.0;  // probability of emitting a wrong label
  double margin = 10.0;    // logit value of the emitted class (one-hot mode)
  bool calibrated = false;  // Gaussian logits instead of one-hot
  uint64_t seed = 1;

  void validate() const {
    if (flip_rate < 0.0 || flip_rate > 1.0)
      throw InvalidArgumentError("oracle: flip_rate outside [0, 1]");
    if (margin <= 0.0)
      throw InvalidArgumentError("oracle: margin must be > 0");
  }
};

/// Segments a view from the cloud's ground truth. In one-hot mode each
/// non-empty pixel gets its point's true class, flipped with probability
/// flip_rate to a uniformly chosen other class, and logits equal to margin
/// at the emitted class. In calibrated mode the true-class logit is drawn
/// from N(margin, 1) and the others from N(0, 1), labels following the
/// argmax. Empty pixels carry all-zero logits and label 0. Deterministic
/// given (seed, view_index).
class OracleSegmenter : public Segmenter {
 public:
  OracleSegmenter(const DensePointCloud& cloud, OracleParams params);

  SegmentationResult segment(const view::RenderedView& view,
                             int num_classes) const override;

 private:
  const DensePointCloud* cloud_;
  OracleParams params_;
};

// --- file exchange protocol -------------------------------------------------
//
// For each rendered view_%06d.png an external tool writes labels_%06d.png
// (8-bit greyscale, pixel value = class index) and optionally
// logits_%06d.bin (little-endian float32, row-major [height][width][C]).
// A RESULTS_READY marker file signals that the batch is complete.

std::string labels_filename(int view_index);
std::string logits_filename(int view_index);
inline constexpr const char* kResultsReadyMarker = "RESULTS_READY";

/// Writes one view's result in the exchange format.
void write_external_result(const std::filesystem::path& dir,
                           int view_index, const SegmentationResult& result,
                           bool with_logits);

/// Drops the RESULTS_READY marker.
void mark_results_ready(const std::filesystem::path& dir);

/// Reads results produced by an external tool. If a view's logits file is
/// absent, one-hot logits at synth_margin are synthesized from its labels.
class ExternalSegmenter : public Segmenter {
 public:
  /// Throws SegmentationError if the directory is missing or the
  /// RESULTS_READY marker has not been written.
  ExternalSegmenter(std::filesystem::path result_dir, double synth_margin);

  SegmentationResult segment(const view::RenderedView& view,
                             int num_classes) const override;

 private:
  std::filesystem::path result_dir_;
  double synth_margin_;
};

}  // namespace viewvote::seg
