// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viewvote/parallel.hpp"
#include "viewvote/rng.hpp"

namespace viewvote::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTMin = 1e-9;

double intersect_plane_z(double plane_z, const Eigen::Vector3d& o,
                         const Eigen::Vector3d& d) {
  if (std::abs(d.z()) < 1e-12) return kInf;
  double t = (plane_z - o.z()) / d.z();
  return t > kTMin ? t : kInf;
}

struct IntersectVisitor {
  const Eigen::Vector3d& o;
  const Eigen::Vector3d& d;

  double operator()(const GroundPlane& g) const {
    return intersect_plane_z(g.z, o, d);
  }

  double operator()(const Strip& s) const {
    double t = intersect_plane_z(s.z, o, d);
    if (t == kInf) return kInf;
    double x = o.x() + t * d.x(), y = o.y() + t * d.y();
    return (x >= s.x0 && x <= s.x1 && y >= s.y0 && y <= s.y1) ? t : kInf;
  }

  double operator()(const Box& b) const {
    // Slab test.
    double t0 = kTMin, t1 = kInf;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(d[k]) < 1e-12) {
        if (o[k] < b.min[k] || o[k] > b.max[k]) return kInf;
        continue;
      }
      double inv = 1.0 / d[k];
      double ta = (b.min[k] - o[k]) * inv;
      double tb = (b.max[k] - o[k]) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return kInf;
    }
    return t0 > kTMin ? t0 : (t1 > kTMin ? t1 : kInf);
  }

  double operator()(const Blob& s) const {
    Eigen::Vector3d oc = o - s.center;
    double b = oc.dot(d);
    double c = oc.squaredNorm() - s.radius * s.radius;
    double disc = b * b - c;
    if (disc < 0.0) return kInf;
    double root = std::sqrt(disc);
    double t = -b - root;
    if (t > kTMin) return t;
    t = -b + root;
    return t > kTMin ? t : kInf;
  }
};

struct SurfaceDistanceVisitor {
  const Eigen::Vector3d& p;

  double operator()(const GroundPlane& g) const { return std::abs(p.z() - g.z); }

  double operator()(const Strip& s) const {
    double dx = std::max({s.x0 - p.x(), 0.0, p.x() - s.x1});
    double dy = std::max({s.y0 - p.y(), 0.0, p.y() - s.y1});
    double dz = p.z() - s.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }

  double operator()(const Box& b) const {
    // Distance to the box boundary (negative inside is folded to the
    // nearest face).
    Eigen::Vector3d q;
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
      q[k] = std::clamp(p[k], b.min[k], b.max[k]);
      inside = inside && q[k] == p[k];
    }
    if (!inside) return (p - q).norm();
    double best = kInf;
    for (int k = 0; k < 3; ++k)
      best = std::min({best, p[k] - b.min[k], b.max[k] - p[k]});
    return best;
  }

  double operator()(const Blob& s) const {
    return std::abs((p - s.center).norm() - s.radius);
  }
};

}  // namespace

double intersect(const Shape& shape, const Eigen::Vector3d& origin,
                 const Eigen::Vector3d& dir) {
  return std::visit(IntersectVisitor{origin, dir}, shape);
}

double surface_distance(const Shape& shape, const Eigen::Vector3d& point) {
  return std::visit(SurfaceDistanceVisitor{point}, shape);
}

void SceneSpec::validate() const {
  if (trajectory.empty())
    throw InvalidArgumentError("scene: empty trajectory");
  for (const Pose& p : trajectory)
    if (!p.is_valid())
      throw InvalidArgumentError("scene: trajectory pose is not a rotation");
  if (primitives.empty())
    throw InvalidArgumentError("scene: no primitives");
  if (class_names.empty())
    throw InvalidArgumentError("scene: no class names");
  for (const Primitive& prim : primitives) {
    if (prim.class_id >= class_names.size())
      throw InvalidArgumentError("scene: primitive class " +
                                 std::to_string(prim.class_id) +
                                 " out of range");
    if (prim.intensity_mean < 0.0 || prim.intensity_mean > 1.0)
      throw InvalidArgumentError("scene: intensity mean outside [0, 1]");
    if (prim.intensity_sigma < 0.0)
      throw InvalidArgumentError("scene: negative intensity sigma");
  }
  if (rays.beams < 1 || rays.azimuth_steps < 1)
    throw InvalidArgumentError("scene: need at least one beam and one step");
  if (max_range <= 0.0)
    throw InvalidArgumentError("scene: max_range must be > 0");
}

ScanSequence generate(const SceneSpec& spec, int workers) {
  spec.validate();

  ScanSequence seq;
  seq.class_names = spec.class_names;
  seq.poses = spec.trajectory;
  seq.scans.resize(spec.trajectory.size());

  const int beams = spec.rays.beams;
  const int steps = spec.rays.azimuth_steps;
  const std::size_t rays_per_scan =
      static_cast<std::size_t>(beams) * static_cast<std::size_t>(steps);

  auto angle_at = [](double lo, double hi, int i, int n) {
    if (n == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  };

  parallel_for(spec.trajectory.size(), workers, [&](std::size_t m) {
    const Pose& pose = spec.trajectory[m];
    RawScan& scan = seq.scans[m];
    scan.scan_index = static_cast<int>(m);

    std::size_t ray_index = 0;
    for (int b = 0; b < beams; ++b) {
      double elev = angle_at(spec.rays.elevation_min_deg,
                             spec.rays.elevation_max_deg, b, beams) *
                    kPi / 180.0;
      for (int a = 0; a < steps; ++a, ++ray_index) {
        double azim = angle_at(spec.rays.azimuth_min_deg,
                               spec.rays.azimuth_max_deg, a, steps) *
                      kPi / 180.0;
        // Sensor frame: X right, Y down, Z forward; elevation climbs -Y.
        Eigen::Vector3d dir_local(std::cos(elev) * std::sin(azim),
                                  -std::sin(elev),
                                  std::cos(elev) * std::cos(azim));
        Eigen::Vector3d dir = pose.rotation * dir_local;

        double best_t = kInf;
        const Primitive* hit = nullptr;
        for (const Primitive& prim : spec.primitives) {
          double t = intersect(prim.shape, pose.translation, dir);
          if (t < best_t) {
            best_t = t;
            hit = &prim;
          }
        }
        if (!hit || best_t > spec.max_range) continue;

        Eigen::Vector3d p_world = pose.translation + best_t * dir;
        Rng rng(Rng::derive(spec.seed, m * rays_per_scan + ray_index));
        double intensity = std::clamp(
            rng.normal(hit->intensity_mean, hit->intensity_sigma), 0.0, 1.0);

        scan.points.push_back(pose.to_local(p_world));
        scan.intensity.push_back(intensity);
        scan.gt_class.push_back(hit->class_id);
      }
    }
  });
  return seq;
}

SceneSpec default_scene(uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.class_names = {"road", "sidewalk", "terrain", "manmade", "vegetation"};
  spec.max_range = 40.0;

  // Camera-convention trajectory along +X: right = -Y, down = -Z,
  // forward = +X, sensor 1.8 m above the road.
  Eigen::Matrix3d heading;
  heading << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  const int num_poses = 20;
  for (int i = 0; i < num_poses; ++i) {
    Pose p;
    p.rotation = heading;
    p.translation =
        Eigen::Vector3d(50.0 * i / (num_poses - 1), 0.0, 1.8);
    spec.trajectory.push_back(p);
  }

  const uint16_t road = 0, sidewalk = 1, terrain = 2, manmade = 3,
                 vegetation = 4;
  auto prim = [](Shape shape, uint16_t cls, double mean) {
    return Primitive{std::move(shape), cls, mean, 0.05};
  };

  spec.primitives.push_back(prim(GroundPlane{0.0}, road, 0.15));
  spec.primitives.push_back(prim(Strip{-5, 60, 4, 7, 0.15}, sidewalk, 0.35));
  spec.primitives.push_back(prim(Strip{-5, 60, -7, -4, 0.15}, sidewalk, 0.35));
  spec.primitives.push_back(prim(Strip{-5, 60, 7, 12, 0.10}, terrain, 0.45));

  auto box = [](double x0, double y0, double x1, double y1, double h) {
    return Box{{x0, y0, 0.3}, {x1, y1, h}};
  };
  spec.primitives.push_back(prim(box(0, 12, 10, 16, 6), manmade, 0.6));
  spec.primitives.push_back(prim(box(15, 12, 25, 15, 8), manmade, 0.6));
  spec.primitives.push_back(prim(box(32, 12, 42, 17, 5), manmade, 0.6));
  spec.primitives.push_back(prim(box(5, -16, 14, -12, 7), manmade, 0.6));
  spec.primitives.push_back(prim(box(24, -16, 34, -12, 5), manmade, 0.6));
  spec.primitives.push_back(prim(box(40, -17, 50, -12, 6), manmade, 0.6));

  auto blob = [](double x, double y, double z, double r) {
    return Blob{{x, y, z}, r};
  };
  spec.primitives.push_back(prim(blob(0, -9, 2.2, 1.2), vegetation, 0.8));
  spec.primitives.push_back(prim(blob(12, -9.5, 2.6, 1.5), vegetation, 0.8));
  spec.primitives.push_back(prim(blob(28, -9, 2.3, 1.3), vegetation, 0.8));
  spec.primitives.push_back(prim(blob(44, -9.5, 2.7, 1.5), vegetation, 0.8));
  spec.primitives.push_back(prim(blob(20, 9.5, 2.5, 1.4), vegetation, 0.8));
  spec.primitives.push_back(prim(blob(48, 9.5, 2.4, 1.3), vegetation, 0.8));

  return spec;
}

}  // namespace viewvote::synth
