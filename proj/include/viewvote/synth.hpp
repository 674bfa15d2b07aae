// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "viewvote/types.hpp"

namespace viewvote::synth {

// Scene primitives, all in world frame (Z up), dimensions in meters.
struct GroundPlane {
  double z = 0.0;  // infinite horizontal plane
};
struct Strip {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // horizontal rectangle
  double z = 0.0;
};
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();  // axis-aligned
  Eigen::Vector3d max = Eigen::Vector3d::Zero();
};
struct Blob {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // sphere
  double radius = 1.0;
};

using Shape = std::variant<GroundPlane, Strip, Box, Blob>;

struct Primitive {
  Shape shape;
  uint16_t class_id = 0;
  double intensity_mean = 0.5;
  double intensity_sigma = 0.05;
};

/// LiDAR beam fan: beams spread over the elevation range, each swept over
/// the azimuth range (angles relative to the sensor pose, azimuth 0 =
/// forward, elevation positive = up).
struct RayPattern {
  int beams = 32;
  int azimuth_steps = 160;
  double azimuth_min_deg = -70.0;
  double azimuth_max_deg = 70.0;
  double elevation_min_deg = -25.0;
  double elevation_max_deg = 5.0;
};

struct SceneSpec {
  std::vector<Pose> trajectory;
  std::vector<Primitive> primitives;
  std::vector<std::string> class_names;
  RayPattern rays;
  double max_range = 40.0;
  uint64_t seed = 0;

  void validate() const;
};

/// First intersection of the ray origin + t * dir (dir unit length) with the
/// primitive, for t in (1e-9, inf). Returns infinity when the ray misses.
double intersect(const Shape& shape, const Eigen::Vector3d& origin,
                 const Eigen::Vector3d& dir);

/// Distance from a point to the primitive's surface (used to check that
/// generated points actually lie on what they claim to).
double surface_distance(const Shape& shape, const Eigen::Vector3d& point);

/// Casts the ray pattern from every trajectory pose; the nearest primitive
/// hit within max_range yields one point with the primitive's class and a
/// clamped Gaussian intensity. Poses are cast in parallel across workers;
/// the result is deterministic given the seed regardless of the worker
/// count (per-ray streams derived from pose and ray indices).
ScanSequence generate(const SceneSpec& spec, int workers = 1);

/// Canonical 5-class street scene along a 50 m straight trajectory of 20
/// poses: road plane, two sidewalk strips, a terrain strip, building boxes
/// and vegetation blobs, with class-separated intensity means.
SceneSpec default_scene(uint64_t seed);

}  // namespace viewvote::synth
