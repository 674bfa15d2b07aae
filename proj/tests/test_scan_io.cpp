// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "test_util.hpp"
#include "viewvote/scan_io.hpp"

using namespace viewvote;
using testutil::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void write_floats(const std::filesystem::path& p,
                  const std::vector<float>& v) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * 4));
}

}  // namespace

TEST_SUITE("scan_io") {

TEST_CASE("pose file: identity line") {
  TempDir tmp("poses");
  write_file(tmp.path / "poses.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n");
  auto poses = cloud::load_poses(tmp.path / "poses.txt");
  REQUIRE(poses.size() == 1);
  CHECK(poses[0].rotation.isIdentity(0));
  CHECK(poses[0].translation == Eigen::Vector3d::Zero());
}

TEST_CASE("pose file: translation is the 4th column") {
  TempDir tmp("poses");
  write_file(tmp.path / "poses.txt", "1 0 0 2.5 0 1 0 -1 0 0 1 7\n");
  auto poses = cloud::load_poses(tmp.path / "poses.txt");
  REQUIRE(poses.size() == 1);
  CHECK(poses[0].translation == Eigen::Vector3d(2.5, -1, 7));
}

TEST_CASE("pose file: wrong arity is a parse error") {
  TempDir tmp("poses");
  write_file(tmp.path / "short.txt", "1 0 0 0 0 1 0 0 0 0 1\n");
  CHECK_THROWS_AS(cloud::load_poses(tmp.path / "short.txt"), ParseError);
  write_file(tmp.path / "long.txt", "1 0 0 0 0 1 0 0 0 0 1 0 9\n");
  CHECK_THROWS_AS(cloud::load_poses(tmp.path / "long.txt"), ParseError);
}

TEST_CASE("pose file: non-orthonormal rotation is rejected") {
  TempDir tmp("poses");
  write_file(tmp.path / "poses.txt", "1 0 0 0 0 2 0 0 0 0 1 0\n");
  CHECK_THROWS_AS(cloud::load_poses(tmp.path / "poses.txt"), ParseError);
}

TEST_CASE("binary scan: two points, 32 bytes") {
  TempDir tmp("scan");
  write_floats(tmp.path / "s.bin",
               {1.f, 2.f, 3.f, 0.5f, -1.f, 0.f, 4.f, 0.25f});
  RawScan scan = cloud::load_scan_file(tmp.path / "s.bin");
  REQUIRE(scan.size() == 2);
  CHECK(scan.points[0] == Eigen::Vector3d(1, 2, 3));
  CHECK(scan.intensity[1] == 0.25);
}

TEST_CASE("binary scan: truncated file is a parse error") {
  TempDir tmp("scan");
  write_floats(tmp.path / "s.bin", {1.f, 2.f, 3.f});
  CHECK_THROWS_AS(cloud::load_scan_file(tmp.path / "s.bin"), ParseError);
}

TEST_CASE("binary scan: negative intensity is rejected") {
  TempDir tmp("scan");
  write_floats(tmp.path / "s.bin", {0.f, 0.f, 0.f, -1.f});
  CHECK_THROWS_AS(cloud::load_scan_file(tmp.path / "s.bin"), ParseError);
}

TEST_CASE("ascii ply import") {
  TempDir tmp("ply");
  write_file(tmp.path / "s.ply",
             "ply\n"
             "format ascii 1.0\n"
             "element vertex 2\n"
             "property float x\n"
             "property float y\n"
             "property float z\n"
             "property float intensity\n"
             "end_header\n"
             "1 2 3 0.5\n"
             "4 5 6 0.75\n");
  RawScan scan = cloud::load_scan_file(tmp.path / "s.ply");
  REQUIRE(scan.size() == 2);
  CHECK(scan.points[1] == Eigen::Vector3d(4, 5, 6));
  CHECK(scan.intensity[0] == 0.5);

  SUBCASE("missing intensity property") {
    write_file(tmp.path / "bad.ply",
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n1 2 3\n");
    CHECK_THROWS_AS(cloud::load_scan_file(tmp.path / "bad.ply"), ParseError);
  }
}

TEST_CASE("scan directory order defines scan_index") {
  TempDir tmp("scans");
  write_floats(tmp.path / "b.bin", {0, 0, 0, 1});
  write_floats(tmp.path / "a.bin", {0, 0, 0, 2});
  auto scans = cloud::load_scans(tmp.path);
  REQUIRE(scans.size() == 2);
  CHECK(scans[0].intensity[0] == 2);  // a.bin sorts first
  CHECK(scans[0].scan_index == 0);
  CHECK(scans[1].scan_index == 1);
}

TEST_CASE("label and class name files round-trip") {
  TempDir tmp("labels");
  std::vector<uint16_t> labels{0, 3, kUnlabeled, 2};
  cloud::save_label_file(tmp.path / "x.labels", labels);
  CHECK(cloud::load_label_file(tmp.path / "x.labels") == labels);

  std::vector<std::string> names{"road", "sidewalk"};
  cloud::save_class_names(tmp.path / "classes.txt", names);
  CHECK(cloud::load_class_names(tmp.path / "classes.txt") == names);
}

TEST_CASE("sequence save/load round-trip") {
  TempDir tmp("seq");
  Rng rng(3);
  ScanSequence seq;
  seq.class_names = {"a", "b", "c"};
  for (int m = 0; m < 3; ++m) {
    RawScan s;
    s.scan_index = m;
    for (int i = 0; i < 50; ++i) {
      s.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5),
                            rng.uniform(-5, 5));
      s.intensity.push_back(rng.next_double());
      s.gt_class.push_back(static_cast<uint16_t>(rng.uniform_index(3)));
    }
    seq.scans.push_back(std::move(s));
    seq.poses.push_back(testutil::random_pose(rng));
  }

  cloud::save_sequence(seq, tmp.path / "scans", tmp.path / "poses.txt",
                       tmp.path / "labels", tmp.path / "classes.txt");
  ScanSequence back =
      cloud::load_sequence(tmp.path / "scans", tmp.path / "poses.txt",
                           tmp.path / "labels", tmp.path / "classes.txt");

  REQUIRE(back.scans.size() == 3);
  CHECK(back.class_names == seq.class_names);
  for (int m = 0; m < 3; ++m) {
    REQUIRE(back.scans[m].size() == 50);
    CHECK(back.scans[m].gt_class == seq.scans[m].gt_class);
    for (int i = 0; i < 50; ++i) {
      // Scan files carry float32; loading gives back the cast values.
      CHECK(back.scans[m].points[i].x() ==
            static_cast<float>(seq.scans[m].points[i].x()));
      CHECK(back.scans[m].intensity[i] ==
            static_cast<float>(seq.scans[m].intensity[i]));
    }
    // Pose text uses %.17g: exact double round-trip.
    CHECK(back.poses[m].rotation == seq.poses[m].rotation);
    CHECK(back.poses[m].translation == seq.poses[m].translation);
  }
}

TEST_CASE("missing files raise IoError") {
  TempDir tmp("missing");
  CHECK_THROWS_AS(cloud::load_poses(tmp.path / "nope.txt"), IoError);
  CHECK_THROWS_AS(cloud::load_scans(tmp.path / "nope"), IoError);
}

}  // TEST_SUITE
