// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/viewgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "viewvote/rng.hpp"

namespace viewvote::view {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d yaw_rotation(double angle_rad) {
  double c = std::cos(angle_rad), s = std::sin(angle_rad);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

std::string view_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%06d", index);
  return buf;
}

template <typename T>
void write_raw(const fs::path& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
void read_raw(const fs::path& path, std::vector<T>& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(T)))
    throw ParseError("unexpected size: " + path.string());
}

}  // namespace

std::vector<Pose> sample_poses(const std::vector<Pose>& sensor_poses,
                               const PoseNoiseParams& params) {
  if (sensor_poses.empty())
    throw InvalidArgumentError("sample_poses: empty sensor pose list");
  params.validate();

  double theta_rad = params.theta_deg * kPi / 180.0;
  Rng rng(params.seed);
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(params.count));

  for (int i = 0; i < params.count; ++i) {
    const Pose& base = sensor_poses[rng.uniform_index(sensor_poses.size())];
    Pose p;
    p.rotation = base.rotation * yaw_rotation(rng.uniform(-theta_rad, theta_rad));
    // Translation jitter along the perturbed camera axes, in the order the
    // axes are listed: X, Z, then Y.
    p.translation = base.translation;
    p.translation += rng.uniform(-params.lambda_m, params.lambda_m) *
                     p.rotation.col(0);
    p.translation += rng.uniform(-params.lambda_m, params.lambda_m) *
                     p.rotation.col(2);
    p.translation += rng.uniform(-params.gamma_m, params.gamma_m) *
                     p.rotation.col(1);
    out.push_back(p);
  }
  return out;
}

RenderedView render(const DensePointCloud& cloud, const Pose& pose,
                    const CameraIntrinsics& intr, int splat_radius,
                    double d_min, double d_max) {
  intr.validate();
  if (!(d_min > 0.0) || !(d_min < d_max))
    throw InvalidArgumentError("render: need 0 < d_min < d_max");
  if (splat_radius < 0)
    throw InvalidArgumentError("render: splat_radius must be >= 0");
  if (cloud.size() == 0) throw InvalidArgumentError("render: empty cloud");

  RenderedView view;
  view.pose = pose;
  view.intrinsics = intr;
  view.d_min = d_min;
  view.d_max = d_max;
  view.image = GreyImage(intr.width, intr.height, 0);
  view.depth = Image<float>(intr.width, intr.height, 0.0f);
  view.point_index = Image<uint32_t>(intr.width, intr.height, kNoPoint);

  // Double depth buffer so z-tests are exact; the float map is quantized at
  // the end.
  std::vector<double> zbuf(view.depth.size(),
                           std::numeric_limits<double>::infinity());

  const Eigen::Matrix3d r_inv = pose.rotation.transpose();
  const double splat = splat_radius + 0.5;
  const double splat_sq = splat * splat;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Eigen::Vector3d pc = r_inv * (cloud.positions[i] - pose.translation);
    double z = pc.z();
    if (z < d_min || z > d_max) continue;

    double u = intr.focal * pc.x() / z + intr.cx;
    double v = intr.focal * pc.y() / z + intr.cy;
    long cu = std::lround(u), cv = std::lround(v);
    if (cu < 0 || cu >= intr.width || cv < 0 || cv >= intr.height) continue;

    int u0 = static_cast<int>(std::ceil(u - splat));
    int u1 = static_cast<int>(std::floor(u + splat));
    int v0 = static_cast<int>(std::ceil(v - splat));
    int v1 = static_cast<int>(std::floor(v + splat));
    u0 = std::max(u0, 0);
    v0 = std::max(v0, 0);
    u1 = std::min(u1, intr.width - 1);
    v1 = std::min(v1, intr.height - 1);

    for (int pv = v0; pv <= v1; ++pv) {
      double dv = pv - v;
      for (int pu = u0; pu <= u1; ++pu) {
        double du = pu - u;
        if (du * du + dv * dv > splat_sq) continue;
        std::size_t idx = static_cast<std::size_t>(pv) * intr.width + pu;
        // Strict < keeps the lowest point index on depth ties.
        if (z < zbuf[idx]) {
          zbuf[idx] = z;
          view.point_index.data[idx] = static_cast<uint32_t>(i);
        }
      }
    }
  }

  for (std::size_t idx = 0; idx < zbuf.size(); ++idx) {
    uint32_t pi = view.point_index.data[idx];
    if (pi == kNoPoint) continue;
    view.depth.data[idx] = static_cast<float>(zbuf[idx]);
    view.image.data[idx] = cloud.grey(pi);
  }
  return view;
}

void export_view(const RenderedView& view, const fs::path& dir) {
  fs::create_directories(dir);
  std::string stem = view_stem(view.view_index);
  write_grey_png(dir / (stem + ".png"), view.image);
  write_raw(dir / (stem + ".idx"), view.point_index.data);
  write_raw(dir / (stem + ".depth"), view.depth.data);

  std::ofstream meta(dir / (stem + ".meta"));
  if (!meta) throw IoError("cannot write sidecar for " + stem);
  char buf[640];
  const Eigen::Matrix3d& r = view.pose.rotation;
  const Eigen::Vector3d& t = view.pose.translation;
  std::snprintf(
      buf, sizeof(buf),
      "view_index: %d\n"
      "width: %d\n"
      "height: %d\n"
      "focal: %.17g\n"
      "cx: %.17g\n"
      "cy: %.17g\n"
      "d_min: %.17g\n"
      "d_max: %.17g\n"
      "rotation: %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n"
      "translation: %.17g %.17g %.17g\n",
      view.view_index, view.intrinsics.width, view.intrinsics.height,
      view.intrinsics.focal, view.intrinsics.cx, view.intrinsics.cy,
      view.d_min, view.d_max, r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1),
      r(1, 2), r(2, 0), r(2, 1), r(2, 2), t.x(), t.y(), t.z());
  meta << buf;
  if (!meta) throw IoError("write failed for " + stem + ".meta");
}

void export_views(const std::vector<RenderedView>& views, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());
  // Probe writability so an empty list on a read-only target still errors.
  {
    fs::path probe = dir / ".write_probe";
    std::ofstream p(probe);
    if (!p) throw IoError("directory not writable: " + dir.string());
    p.close();
    fs::remove(probe, ec);
  }
  for (const auto& v : views) export_view(v, dir);
}

RenderedView import_view(const fs::path& dir, int view_index) {
  std::string stem = view_stem(view_index);
  fs::path meta_path = dir / (stem + ".meta");
  std::ifstream meta(meta_path);
  if (!meta) throw IoError("cannot open: " + meta_path.string());

  RenderedView view;
  std::string line;
  long line_no = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    std::istringstream val(line.substr(colon + 1));
    bool ok = true;
    if (key == "view_index")
      ok = static_cast<bool>(val >> view.view_index);
    else if (key == "width")
      ok = static_cast<bool>(val >> view.intrinsics.width);
    else if (key == "height")
      ok = static_cast<bool>(val >> view.intrinsics.height);
    else if (key == "focal")
      ok = static_cast<bool>(val >> view.intrinsics.focal);
    else if (key == "cx")
      ok = static_cast<bool>(val >> view.intrinsics.cx);
    else if (key == "cy")
      ok = static_cast<bool>(val >> view.intrinsics.cy);
    else if (key == "d_min")
      ok = static_cast<bool>(val >> view.d_min);
    else if (key == "d_max")
      ok = static_cast<bool>(val >> view.d_max);
    else if (key == "rotation") {
      for (int r = 0; r < 3 && ok; ++r)
        for (int c = 0; c < 3 && ok; ++c)
          ok = static_cast<bool>(val >> view.pose.rotation(r, c));
    } else if (key == "translation") {
      for (int k = 0; k < 3 && ok; ++k)
        ok = static_cast<bool>(val >> view.pose.translation(k));
    }
    if (!ok)
      throw ParseError(meta_path.string(), line_no, "malformed value");
  }

  view.image = read_grey_png(dir / (stem + ".png"));
  if (view.image.width != view.intrinsics.width ||
      view.image.height != view.intrinsics.height)
    throw ParseError(stem + ".png does not match sidecar dimensions");

  view.depth = Image<float>(view.intrinsics.width, view.intrinsics.height);
  view.point_index =
      Image<uint32_t>(view.intrinsics.width, view.intrinsics.height);
  read_raw(dir / (stem + ".depth"), view.depth.data);
  read_raw(dir / (stem + ".idx"), view.point_index.data);
  return view;
}

}  // namespace viewvote::view
