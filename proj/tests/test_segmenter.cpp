// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "test_util.hpp"
#include "viewvote/segmenter.hpp"

using namespace viewvote;
using testutil::TempDir;

namespace {

/// View whose pixels all point at cloud points, without rendering: pixel i
/// maps to point i % cloud size.
view::RenderedView synthetic_view(const DensePointCloud& cloud, int width,
                                  int height, int view_index = 0) {
  view::RenderedView v;
  v.view_index = view_index;
  v.intrinsics.width = width;
  v.intrinsics.height = height;
  v.intrinsics.focal = width / 2.0;
  v.intrinsics.cx = width / 2.0;
  v.intrinsics.cy = height / 2.0;
  v.image = GreyImage(width, height, 0);
  v.depth = Image<float>(width, height, 5.0f);
  v.point_index = Image<uint32_t>(width, height, kNoPoint);
  for (std::size_t i = 0; i < v.point_index.size(); ++i)
    v.point_index.data[i] = static_cast<uint32_t>(i % cloud.size());
  return v;
}

}  // namespace

TEST_SUITE("segmenter") {

TEST_CASE("noiseless oracle reproduces ground truth") {
  auto cloud = testutil::random_cloud(500, 5, 1);
  auto v = synthetic_view(cloud, 64, 48);
  seg::OracleSegmenter oracle(cloud, {});
  auto res = oracle.segment(v, 5);
  res.validate_against(v);
  for (std::size_t i = 0; i < v.point_index.size(); ++i)
    CHECK(res.labels.data[i] == cloud.gt_class[v.point_index.data[i]]);
}

TEST_CASE("full flip with two classes is always wrong") {
  auto cloud = testutil::random_cloud(100, 2, 2);
  auto v = synthetic_view(cloud, 32, 32);
  seg::OracleParams params;
  params.flip_rate = 1.0;
  seg::OracleSegmenter oracle(cloud, params);
  auto res = oracle.segment(v, 2);
  for (std::size_t i = 0; i < v.point_index.size(); ++i)
    CHECK(res.labels.data[i] == 1 - cloud.gt_class[v.point_index.data[i]]);
}

TEST_CASE("flip rate converges to p on a million pixels") {
  auto cloud = testutil::random_cloud(1000, 5, 3);
  auto v = synthetic_view(cloud, 1024, 1024);  // ~1.05e6 pixels
  seg::OracleParams params;
  params.flip_rate = 0.5;
  seg::OracleSegmenter oracle(cloud, params);
  auto res = oracle.segment(v, 5);

  std::size_t wrong = 0;
  for (std::size_t i = 0; i < v.point_index.size(); ++i)
    if (res.labels.data[i] != cloud.gt_class[v.point_index.data[i]]) ++wrong;
  double rate = static_cast<double>(wrong) /
                static_cast<double>(v.point_index.size());
  CHECK(rate > 0.49);
  CHECK(rate < 0.51);
}

TEST_CASE("empty pixels carry zero logits and label 0") {
  auto cloud = testutil::random_cloud(10, 3, 4);
  auto v = synthetic_view(cloud, 16, 16);
  v.point_index.at(3, 3) = kNoPoint;
  seg::OracleSegmenter oracle(cloud, {});
  auto res = oracle.segment(v, 3);
  CHECK(res.labels.at(3, 3) == 0);
  const float* row = res.logit_row(3, 3);
  for (int c = 0; c < 3; ++c) CHECK(row[c] == 0.0f);
}

TEST_CASE("oracle is deterministic given its seed") {
  auto cloud = testutil::random_cloud(200, 4, 5);
  auto v = synthetic_view(cloud, 64, 64, 7);
  seg::OracleParams params;
  params.flip_rate = 0.3;
  params.seed = 42;
  seg::OracleSegmenter oracle(cloud, params);
  auto a = oracle.segment(v, 4);
  auto b = oracle.segment(v, 4);
  CHECK(a.labels.data == b.labels.data);
  CHECK(a.logits == b.logits);

  // A different view index shifts the stream.
  auto v2 = synthetic_view(cloud, 64, 64, 8);
  auto c = oracle.segment(v2, 4);
  CHECK(a.labels.data != c.labels.data);
}

TEST_CASE("calibrated oracle satisfies the argmax invariant") {
  auto cloud = testutil::random_cloud(300, 5, 6);
  auto v = synthetic_view(cloud, 48, 48);
  seg::OracleParams params;
  params.calibrated = true;
  params.margin = 2.0;
  seg::OracleSegmenter oracle(cloud, params);
  auto res = oracle.segment(v, 5);
  res.validate_against(v);  // checks argmax consistency + finiteness

  // With margin 2 the true class should win most but not all pixels.
  std::size_t right = 0;
  for (std::size_t i = 0; i < v.point_index.size(); ++i)
    if (res.labels.data[i] == cloud.gt_class[v.point_index.data[i]]) ++right;
  double acc = static_cast<double>(right) /
               static_cast<double>(v.point_index.size());
  CHECK(acc > 0.6);
  CHECK(acc < 0.999);
}

TEST_CASE("oracle requires ground truth") {
  DensePointCloud cloud;
  cloud.positions.push_back({0, 0, 5});
  cloud.intensity_norm.push_back(0.5);
  cloud.source_scan.push_back(0);
  CHECK_THROWS_AS(seg::OracleSegmenter(cloud, {}), SegmentationError);
}

TEST_CASE("exchange protocol round-trips labels and logits") {
  TempDir tmp("seg");
  auto cloud = testutil::random_cloud(50, 4, 7);
  auto v = synthetic_view(cloud, 32, 24);
  seg::OracleParams params;
  params.calibrated = true;
  seg::OracleSegmenter oracle(cloud, params);
  auto res = oracle.segment(v, 4);

  seg::write_external_result(tmp.path, 0, res, true);
  seg::mark_results_ready(tmp.path);

  seg::ExternalSegmenter reader(tmp.path, 10.0);
  auto back = reader.segment(v, 4);
  CHECK(back.labels.data == res.labels.data);
  CHECK(back.logits == res.logits);
  back.validate_against(v);
}

TEST_CASE("labels-only results synthesize one-hot logits") {
  TempDir tmp("seg");
  GreyImage labels(20, 10, 3);  // constant class 3
  write_grey_png(tmp.path / seg::labels_filename(0), labels);
  seg::mark_results_ready(tmp.path);

  DensePointCloud cloud = testutil::random_cloud(5, 5, 8);
  auto v = synthetic_view(cloud, 20, 10);
  seg::ExternalSegmenter reader(tmp.path, 7.5);
  auto res = reader.segment(v, 5);
  for (std::size_t i = 0; i < res.labels.size(); ++i) {
    CHECK(res.labels.data[i] == 3);
    CHECK(res.logits[i * 5 + 3] == 7.5f);
    CHECK(res.logits[i * 5 + 0] == 0.0f);
  }
}

TEST_CASE("missing results are reported by view index") {
  TempDir tmp("seg");
  auto cloud = testutil::random_cloud(5, 3, 9);
  for (int i = 0; i < 10; ++i) {
    if (i == 5) continue;
    GreyImage labels(8, 8, 1);
    write_grey_png(tmp.path / seg::labels_filename(i), labels);
  }
  seg::mark_results_ready(tmp.path);

  seg::ExternalSegmenter reader(tmp.path, 10.0);
  for (int i = 0; i < 10; ++i) {
    auto v = synthetic_view(cloud, 8, 8, i);
    if (i == 5) {
      CHECK(testutil::throws_with<SegmentationError>(
          [&] { reader.segment(v, 3); }, "view 5"));
    } else {
      CHECK_NOTHROW(reader.segment(v, 3));
    }
  }
}

TEST_CASE("malformed external results are rejected") {
  TempDir tmp("seg");
  auto cloud = testutil::random_cloud(5, 3, 10);
  auto v = synthetic_view(cloud, 8, 8);

  SUBCASE("missing ready marker") {
    write_grey_png(tmp.path / seg::labels_filename(0), GreyImage(8, 8, 0));
    CHECK_THROWS_AS(seg::ExternalSegmenter(tmp.path, 10.0),
                    SegmentationError);
  }
  SUBCASE("wrong label shape") {
    write_grey_png(tmp.path / seg::labels_filename(0), GreyImage(9, 8, 0));
    seg::mark_results_ready(tmp.path);
    seg::ExternalSegmenter reader(tmp.path, 10.0);
    CHECK(testutil::throws_with<SegmentationError>(
        [&] { reader.segment(v, 3); }, "shape mismatch"));
  }
  SUBCASE("label out of class range") {
    write_grey_png(tmp.path / seg::labels_filename(0), GreyImage(8, 8, 7));
    seg::mark_results_ready(tmp.path);
    seg::ExternalSegmenter reader(tmp.path, 10.0);
    CHECK_THROWS_AS(reader.segment(v, 3), SegmentationError);
  }
  SUBCASE("wrong logits byte length") {
    write_grey_png(tmp.path / seg::labels_filename(0), GreyImage(8, 8, 0));
    std::ofstream(tmp.path / seg::logits_filename(0), std::ios::binary)
        << "abc";
    seg::mark_results_ready(tmp.path);
    seg::ExternalSegmenter reader(tmp.path, 10.0);
    CHECK(testutil::throws_with<SegmentationError>(
        [&] { reader.segment(v, 3); }, "shape mismatch"));
  }
  SUBCASE("non-finite logit") {
    write_grey_png(tmp.path / seg::labels_filename(0), GreyImage(8, 8, 0));
    std::vector<float> logits(8 * 8 * 3, 0.0f);
    logits[10] = std::numeric_limits<float>::infinity();
    std::ofstream out(tmp.path / seg::logits_filename(0), std::ios::binary);
    out.write(reinterpret_cast<const char*>(logits.data()),
              static_cast<std::streamsize>(logits.size() * 4));
    out.close();
    seg::mark_results_ready(tmp.path);
    seg::ExternalSegmenter reader(tmp.path, 10.0);
    CHECK(testutil::throws_with<SegmentationError>(
        [&] { reader.segment(v, 3); }, "non-finite"));
  }
}

TEST_CASE("oracle parameter validation") {
  auto cloud = testutil::random_cloud(5, 3, 11);
  seg::OracleParams params;
  params.flip_rate = 1.5;
  CHECK_THROWS_AS(seg::OracleSegmenter(cloud, params), InvalidArgumentError);
  params.flip_rate = 0.5;
  params.margin = 0.0;
  CHECK_THROWS_AS(seg::OracleSegmenter(cloud, params), InvalidArgumentError);
}

}  // TEST_SUITE
