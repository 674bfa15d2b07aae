// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <cstdint>
#include <string>
#include <vector>

#include "viewvote/error.hpp"

namespace viewvote {

/// Class index marking a point without a (pseudo-)label.
inline constexpr uint16_t kUnlabeled = 0xFFFF;

/// Pixel value marking an empty cell in a point-index map.
inline constexpr uint32_t kNoPoint = 0xFFFFFFFFu;

/// Rigid transform: world_point = rotation * local_point + translation.
///
/// For sensor and virtual-camera poses the rotation columns are the frame
/// axes expressed in world coordinates (camera convention: X right, Y down,
/// Z forward; world is Z-up).
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  /// Maps a world point into this pose's local frame.
  Eigen::Vector3d to_local(const Eigen::Vector3d& p) const {
    return rotation.transpose() * (p - translation);
  }

  /// True iff the rotation is orthonormal with det +1, to 1e-6 per entry.
  bool is_valid() const {
    Eigen::Matrix3d rtr = rotation.transpose() * rotation;
    if (((rtr - Eigen::Matrix3d::Identity()).array().abs() > 1e-6).any())
      return false;
    return std::abs(rotation.determinant() - 1.0) <= 1e-6;
  }
};

/// One LiDAR scan in its sensor frame.
struct RawScan {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> intensity;       // same length as points, >= 0
  std::vector<uint16_t> gt_class;      // optional; empty or same length
  int scan_index = 0;

  std::size_t size() const { return points.size(); }
  bool has_gt() const { return !gt_class.empty(); }
};

/// A sequence of scans with one sensor pose per scan.
struct ScanSequence {
  std::vector<RawScan> scans;
  std::vector<Pose> poses;
  std::vector<std::string> class_names;  // ordered, defines class indices

  std::size_t num_classes() const { return class_names.size(); }

  void validate() const {
    if (scans.size() != poses.size())
      throw InvalidArgumentError(
          "scan/pose count mismatch: " + std::to_string(scans.size()) +
          " scans vs " + std::to_string(poses.size()) + " poses");
    for (const auto& scan : scans) {
      if (scan.intensity.size() != scan.points.size())
        throw InvalidArgumentError("scan " + std::to_string(scan.scan_index) +
                                   ": intensity/point count mismatch");
      if (scan.has_gt() && scan.gt_class.size() != scan.points.size())
        throw InvalidArgumentError("scan " + std::to_string(scan.scan_index) +
                                   ": label/point count mismatch");
      if (scan.has_gt()) {
        for (uint16_t c : scan.gt_class)
          if (c != kUnlabeled && c >= class_names.size())
            throw InvalidArgumentError(
                "scan " + std::to_string(scan.scan_index) +
                ": ground-truth class " + std::to_string(c) + " out of range");
      }
    }
    for (std::size_t i = 0; i < poses.size(); ++i)
      if (!poses[i].is_valid())
        throw InvalidArgumentError("pose " + std::to_string(i) +
                                   " is not a proper rotation");
  }
};

/// All scans of a sequence aligned into one world-frame cloud.
///
/// intensity_norm lies in [eta_min, eta_max] for every point. gt_class is
/// empty when the sequence carried no ground truth.
struct DensePointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> intensity_norm;
  std::vector<uint32_t> source_scan;
  std::vector<uint16_t> gt_class;  // empty if absent
  std::vector<std::string> class_names;
  double eta_min = 0.0;
  double eta_max = 1.0;

  std::size_t size() const { return positions.size(); }
  bool has_gt() const { return !gt_class.empty(); }
  std::size_t num_classes() const { return class_names.size(); }

  /// Normalized intensity quantized to 8-bit greyscale.
  uint8_t grey(std::size_t i) const {
    double span = eta_max - eta_min;
    if (span <= 0.0) return 0;
    double t = (intensity_norm[i] - eta_min) / span;
    if (t < 0.0) t = 0.0;
    if (t > 1.0) t = 1.0;
    return static_cast<uint8_t>(std::lround(t * 255.0));
  }
};

}  // namespace viewvote
