// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "viewvote/image.hpp"
#include "viewvote/types.hpp"

namespace viewvote::view {

/// Pinhole camera: u = focal * x/z + cx, v = focal * y/z + cy.
struct CameraIntrinsics {
  int width = 1024;
  int height = 512;
  double focal = 512.0;  // 90 degree horizontal FOV at the default width
  double cx = 512.0;
  double cy = 256.0;

  void validate() const {
    if (width < 1 || height < 1)
      throw InvalidArgumentError("intrinsics: image size must be >= 1");
    if (focal <= 0.0)
      throw InvalidArgumentError("intrinsics: focal must be > 0");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
      throw InvalidArgumentError("intrinsics: principal point outside image");
  }

  static CameraIntrinsics defaults(int w = 1024, int h = 512) {
    CameraIntrinsics c;
    c.width = w;
    c.height = h;
    c.focal = w / 2.0;
    c.cx = w / 2.0;
    c.cy = h / 2.0;
    return c;
  }
};

/// Virtual-camera jitter: yaw about camera Y in [-theta, theta], translation
/// offsets in [-lambda, lambda] along camera X and Z and [-gamma, gamma]
/// along camera Y.
struct PoseNoiseParams {
  double theta_deg = 30.0;
  double lambda_m = 1.0;
  double gamma_m = 1.0;
  int count = 600;  // K
  uint64_t seed = 0;

  void validate() const {
    if (theta_deg < 0.0 || lambda_m < 0.0 || gamma_m < 0.0)
      throw InvalidArgumentError("pose noise: ranges must be >= 0");
    if (count < 1)
      throw InvalidArgumentError("pose noise: view count must be >= 1");
  }
};

/// One rendered virtual view: greyscale image, per-pixel depth (0 = empty)
/// and per-pixel winning point index (kNoPoint = empty).
struct RenderedView {
  int view_index = 0;
  Pose pose;
  CameraIntrinsics intrinsics;
  double d_min = 1.0;
  double d_max = 30.0;
  GreyImage image;
  Image<float> depth;
  Image<uint32_t> point_index;
};

/// Draws K virtual camera poses: a uniformly chosen trajectory pose with a
/// yaw perturbation and translation jitter along the perturbed camera axes.
/// Deterministic given the seed.
std::vector<Pose> sample_poses(const std::vector<Pose>& sensor_poses,
                               const PoseNoiseParams& params);

/// Renders the cloud from one pose. Points with camera depth outside
/// [d_min, d_max] or whose projection rounds outside the image are dropped;
/// the rest splat onto every pixel whose center lies within
/// (splat_radius + 0.5) of the projection, nearest depth winning each pixel
/// (ties to the lowest point index).
RenderedView render(const DensePointCloud& cloud, const Pose& pose,
                    const CameraIntrinsics& intr, int splat_radius,
                    double d_min, double d_max);

/// Writes view_%06d.png plus a .meta sidecar and raw depth/point-index maps
/// for each view. Creates the directory if needed.
void export_views(const std::vector<RenderedView>& views,
                  const std::filesystem::path& dir);

/// Writes a single view's artifacts (view_%06d.png, .meta, idx/depth bins).
void export_view(const RenderedView& view, const std::filesystem::path& dir);

/// Reloads a view exported by export_view.
RenderedView import_view(const std::filesystem::path& dir, int view_index);

}  // namespace viewvote::view
