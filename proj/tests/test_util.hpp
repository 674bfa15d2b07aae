// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>

#include "viewvote/rng.hpp"
#include "viewvote/types.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("viewvote_" + tag + "_" + std::to_string(counter.fetch_add(1)) +
            "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Rotation from intrinsic ZYX Euler angles; orthonormal by construction.
inline Eigen::Matrix3d rotation_zyx(double yaw, double pitch, double roll) {
  Eigen::Matrix3d rz, ry, rx;
  rz << std::cos(yaw), -std::sin(yaw), 0, std::sin(yaw), std::cos(yaw), 0, 0,
      0, 1;
  ry << std::cos(pitch), 0, std::sin(pitch), 0, 1, 0, -std::sin(pitch), 0,
      std::cos(pitch);
  rx << 1, 0, 0, 0, std::cos(roll), -std::sin(roll), 0, std::sin(roll),
      std::cos(roll);
  return rz * ry * rx;
}

inline viewvote::Pose random_pose(viewvote::Rng& rng, double t_range = 10.0) {
  viewvote::Pose p;
  p.rotation = rotation_zyx(rng.uniform(-3.1, 3.1), rng.uniform(-1.5, 1.5),
                            rng.uniform(-3.1, 3.1));
  p.translation = Eigen::Vector3d(rng.uniform(-t_range, t_range),
                                  rng.uniform(-t_range, t_range),
                                  rng.uniform(-t_range, t_range));
  return p;
}

/// True iff fn() throws E whose message contains `needle`.
template <typename E, typename Fn>
bool throws_with(Fn&& fn, const std::string& needle) {
  try {
    fn();
  } catch (const E& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

/// Random labeled cloud in a box in front of an identity-pose camera
/// (z in [z_min, z_max]).
inline viewvote::DensePointCloud random_cloud(std::size_t n, int num_classes,
                                              uint64_t seed,
                                              double z_min = 2.0,
                                              double z_max = 25.0) {
  viewvote::Rng rng(seed);
  viewvote::DensePointCloud cloud;
  cloud.positions.reserve(n);
  cloud.intensity_norm.reserve(n);
  cloud.source_scan.reserve(n);
  cloud.gt_class.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = rng.uniform(z_min, z_max);
    cloud.positions.emplace_back(rng.uniform(-0.6, 0.6) * z,
                                 rng.uniform(-0.35, 0.35) * z, z);
    cloud.intensity_norm.push_back(rng.next_double());
    cloud.source_scan.push_back(0);
    cloud.gt_class.push_back(static_cast<uint16_t>(
        rng.uniform_index(static_cast<std::size_t>(num_classes))));
  }
  for (int c = 0; c < num_classes; ++c)
    cloud.class_names.push_back("class" + std::to_string(c));
  return cloud;
}

}  // namespace testutil
