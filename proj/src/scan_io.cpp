// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/scan_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace viewvote::cloud {

namespace fs = std::filesystem;

namespace {

std::vector<char> read_all_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  in.seekg(0, std::ios::end);
  auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(bytes.data(), size))
    throw IoError("short read: " + path.string());
  return bytes;
}

RawScan load_binary_scan(const fs::path& path) {
  std::vector<char> bytes = read_all_bytes(path);
  if (bytes.size() % 16 != 0)
    throw ParseError(path.string() + ": size " + std::to_string(bytes.size()) +
                     " is not a multiple of 16 bytes (x,y,z,intensity float32)");
  std::size_t n = bytes.size() / 16;
  RawScan scan;
  scan.points.reserve(n);
  scan.intensity.reserve(n);
  const char* p = bytes.data();
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    std::memcpy(v, p + i * 16, 16);
    for (float x : v)
      if (!std::isfinite(x))
        throw ParseError(path.string() + ": non-finite value in point " +
                         std::to_string(i));
    if (v[3] < 0.0f)
      throw ParseError(path.string() + ": negative intensity in point " +
                       std::to_string(i));
    scan.points.emplace_back(v[0], v[1], v[2]);
    scan.intensity.push_back(v[3]);
  }
  return scan;
}

RawScan load_ply_scan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());

  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };

  if (!next_line() || line.rfind("ply", 0) != 0)
    throw ParseError(path.string(), line_no, "missing 'ply' magic");

  std::size_t vertex_count = 0;
  std::vector<std::string> props;
  bool ascii = false;
  bool in_vertex_element = false;
  while (next_line()) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = (fmt == "ascii");
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element)
        vertex_count = count;
      else if (count > 0)
        throw ParseError(path.string(), line_no,
                         "unsupported element '" + name + "'");
    } else if (word == "property" && in_vertex_element) {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      break;
    } else if (word == "comment" || word == "property") {
      continue;
    }
  }
  if (!ascii)
    throw ParseError(path.string(), line_no, "only ascii PLY is supported");

  auto index_of = [&](const std::string& name) -> int {
    auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end())
      throw ParseError(path.string(), line_no,
                       "missing vertex property '" + name + "'");
    return static_cast<int>(it - props.begin());
  };
  int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  int ii = index_of("intensity");

  RawScan scan;
  scan.points.reserve(vertex_count);
  scan.intensity.reserve(vertex_count);
  std::vector<double> row(props.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!next_line())
      throw ParseError(path.string(), line_no, "unexpected end of file");
    std::istringstream ss(line);
    for (std::size_t k = 0; k < props.size(); ++k)
      if (!(ss >> row[k]))
        throw ParseError(path.string(), line_no, "malformed vertex row");
    for (int k : {ix, iy, iz, ii})
      if (!std::isfinite(row[k]))
        throw ParseError(path.string(), line_no, "non-finite value");
    if (row[ii] < 0.0)
      throw ParseError(path.string(), line_no, "negative intensity");
    scan.points.emplace_back(row[ix], row[iy], row[iz]);
    scan.intensity.push_back(row[ii]);
  }
  return scan;
}

}  // namespace

RawScan load_scan_file(const fs::path& path, ScanFormat format) {
  if (format == ScanFormat::auto_detect) {
    auto ext = path.extension().string();
    if (ext == ".ply")
      format = ScanFormat::ply;
    else if (ext == ".bin")
      format = ScanFormat::binary;
    else
      throw InvalidArgumentError("cannot infer scan format from extension: " +
                                 path.string());
  }
  return format == ScanFormat::ply ? load_ply_scan(path)
                                   : load_binary_scan(path);
}

std::vector<RawScan> load_scans(const fs::path& dir, ScanFormat format) {
  if (!fs::is_directory(dir))
    throw IoError("scan directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".bin" || ext == ".ply") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<RawScan> scans;
  scans.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    RawScan scan = load_scan_file(files[i], format);
    scan.scan_index = static_cast<int>(i);
    scans.push_back(std::move(scan));
  }
  return scans;
}

std::vector<Pose> load_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());

  std::vector<Pose> poses;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double v[12];
    for (int k = 0; k < 12; ++k)
      if (!(ss >> v[k]))
        throw ParseError(path.string(), line_no,
                         "expected 12 values, got " + std::to_string(k));
    double extra;
    if (ss >> extra)
      throw ParseError(path.string(), line_no, "more than 12 values");

    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation << v[3], v[7], v[11];
    if (!pose.is_valid())
      throw ParseError(path.string(), line_no,
                       "rotation is not orthonormal with det +1");
    poses.push_back(pose);
  }
  return poses;
}

std::vector<uint16_t> load_label_file(const fs::path& path) {
  std::vector<char> bytes = read_all_bytes(path);
  if (bytes.size() % 2 != 0)
    throw ParseError(path.string() + ": odd byte count for uint16 labels");
  std::vector<uint16_t> labels(bytes.size() / 2);
  std::memcpy(labels.data(), bytes.data(), bytes.size());
  return labels;
}

std::vector<std::string> load_class_names(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  if (names.empty())
    throw ParseError(path.string() + ": no class names");
  return names;
}

ScanSequence load_sequence(const fs::path& scans_dir,
                           const fs::path& poses_file,
                           const fs::path& labels_dir,
                           const fs::path& classes_file) {
  ScanSequence seq;
  seq.scans = load_scans(scans_dir);
  seq.poses = load_poses(poses_file);
  if (!classes_file.empty()) seq.class_names = load_class_names(classes_file);

  if (!labels_dir.empty()) {
    if (!fs::is_directory(labels_dir))
      throw IoError("label directory not found: " + labels_dir.string());
    std::vector<fs::path> scan_files;
    for (const auto& entry : fs::directory_iterator(scans_dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      if (ext == ".bin" || ext == ".ply") scan_files.push_back(entry.path());
    }
    std::sort(scan_files.begin(), scan_files.end());
    for (std::size_t i = 0; i < scan_files.size(); ++i) {
      fs::path label_path =
          labels_dir / (scan_files[i].stem().string() + ".labels");
      if (!fs::exists(label_path))
        throw IoError("missing label file: " + label_path.string());
      seq.scans[i].gt_class = load_label_file(label_path);
      if (seq.scans[i].gt_class.size() != seq.scans[i].size())
        throw ParseError(label_path.string() + ": " +
                         std::to_string(seq.scans[i].gt_class.size()) +
                         " labels for " + std::to_string(seq.scans[i].size()) +
                         " points");
    }
  }
  seq.validate();
  return seq;
}

void save_scan_file(const fs::path& path, const RawScan& scan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    float v[4] = {static_cast<float>(scan.points[i].x()),
                  static_cast<float>(scan.points[i].y()),
                  static_cast<float>(scan.points[i].z()),
                  static_cast<float>(scan.intensity[i])};
    out.write(reinterpret_cast<const char*>(v), 16);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_poses(const fs::path& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  char buf[512];
  for (const Pose& p : poses) {
    const Eigen::Matrix3d& r = p.rotation;
    const Eigen::Vector3d& t = p.translation;
    std::snprintf(buf, sizeof(buf),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g\n",
                  r(0, 0), r(0, 1), r(0, 2), t.x(), r(1, 0), r(1, 1), r(1, 2),
                  t.y(), r(2, 0), r(2, 1), r(2, 2), t.z());
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_label_file(const fs::path& path,
                     const std::vector<uint16_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * 2));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_class_names(const fs::path& path,
                      const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& n : names) out << n << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void save_sequence(const ScanSequence& seq, const fs::path& scans_dir,
                   const fs::path& poses_file, const fs::path& labels_dir,
                   const fs::path& classes_file) {
  fs::create_directories(scans_dir);
  char name[64];
  for (std::size_t i = 0; i < seq.scans.size(); ++i) {
    std::snprintf(name, sizeof(name), "scan_%06zu.bin", i);
    save_scan_file(scans_dir / name, seq.scans[i]);
  }
  save_poses(poses_file, seq.poses);
  if (!labels_dir.empty()) {
    fs::create_directories(labels_dir);
    for (std::size_t i = 0; i < seq.scans.size(); ++i) {
      if (!seq.scans[i].has_gt()) continue;
      std::snprintf(name, sizeof(name), "scan_%06zu.labels", i);
      save_label_file(labels_dir / name, seq.scans[i].gt_class);
    }
  }
  if (!classes_file.empty()) save_class_names(classes_file, seq.class_names);
}

}  // namespace viewvote::cloud
