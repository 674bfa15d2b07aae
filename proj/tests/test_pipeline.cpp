// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "test_util.hpp"
#include "viewvote/pipeline.hpp"
#include "viewvote/scan_io.hpp"
#include "viewvote/synth.hpp"

using namespace viewvote;
using testutil::TempDir;

namespace {

namespace fs = std::filesystem;

std::string small_config(const std::string& extra = "") {
  // Small camera + few views to keep pipeline tests fast.
  return "synth.enabled = true\n"
         "synth.seed = 0\n"
         "views.count = 6\n"
         "views.seed = 1\n"
         "camera.width = 256\n"
         "camera.height = 128\n"
         "workers = 1\n" +
         extra;
}

pipeline::PipelineConfig config_in(const fs::path& dir,
                                   const std::string& text) {
  // Ground-truth labels and class names default to synth outputs.
  std::string body = text +
                     "paths.labels = data/labels\n"
                     "paths.classes = data/classes.txt\n";
  return pipeline::parse_config_text(body, "test.cfg", dir);
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::vector<char>((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
}

fs::file_time_type mtime(const fs::path& p) { return fs::last_write_time(p); }

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing: defaults, overrides, and rejection") {
  auto cfg = pipeline::parse_config_text("", "t", "/base");
  CHECK(cfg.noise.count == 600);
  CHECK(cfg.noise.theta_deg == 30.0);
  CHECK(cfg.noise.lambda_m == 1.0);
  CHECK(cfg.noise.gamma_m == 1.0);
  CHECK(cfg.d_min == 1.0);
  CHECK(cfg.d_max == 30.0);
  CHECK(cfg.splat_radius == 1);
  CHECK(cfg.intrinsics().focal == 512.0);
  CHECK(cfg.estimator == vote::Estimator::hard_sum);

  SUBCASE("relative paths resolve against the config directory") {
    CHECK(cfg.work_dir == fs::path("/base/work"));
    auto abs = pipeline::parse_config_text("paths.work = /elsewhere\n", "t",
                                           "/base");
    CHECK(abs.work_dir == fs::path("/elsewhere"));
  }
  SUBCASE("camera focal follows the width unless set") {
    auto wide = pipeline::parse_config_text("camera.width = 2000\n", "t", "");
    CHECK(wide.intrinsics().focal == 1000.0);
    CHECK(wide.intrinsics().cx == 1000.0);
    auto fixed = pipeline::parse_config_text(
        "camera.width = 2000\ncamera.focal = 700\n", "t", "");
    CHECK(fixed.intrinsics().focal == 700.0);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK(testutil::throws_with<ParseError>(
        [] { pipeline::parse_config_text("views.cnt = 5\n", "t", ""); },
        "views.cnt"));
  }
  SUBCASE("malformed values carry line context") {
    CHECK(testutil::throws_with<ParseError>(
        [] {
          pipeline::parse_config_text("\n\nviews.count = many\n", "t", "");
        },
        "t:3"));
  }
  SUBCASE("merge list parses") {
    auto m = pipeline::parse_config_text(
        "eval.merge = terrain->sidewalk, a->b\n", "t", "");
    REQUIRE(m.merge_names.size() == 2);
    CHECK(m.merge_names[0] == std::pair<std::string, std::string>{"terrain",
                                                                  "sidewalk"});
  }
  SUBCASE("invalid config values are rejected") {
    CHECK_THROWS(pipeline::parse_config_text("views.count = 0\n", "t", ""));
    CHECK_THROWS(pipeline::parse_config_text("render.d_min = -1\n", "t", ""));
    CHECK_THROWS(
        pipeline::parse_config_text("segmenter.kind = banana\n", "t", ""));
    CHECK_THROWS(
        pipeline::parse_config_text("vote.estimator = banana\n", "t", ""));
  }
}

TEST_CASE("noiseless pipeline labels every voted point correctly") {
  TempDir tmp("pipe");
  auto cfg = config_in(tmp.path,
                       small_config("eval.unlabeled_policy = exclude\n"));
  pipeline::Pipeline p(cfg);
  p.set_quiet(true);
  p.run();

  REQUIRE(fs::exists(p.report_json_file()));
  auto labels = vote::load_point_labels(p.labels_file());
  auto cloud = pipeline::load_cloud(p.cloud_file());
  REQUIRE(labels.size() == cloud.size());

  std::size_t voted = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kUnlabeled) continue;
    ++voted;
    CHECK(labels[i] == cloud.gt_class[i]);
  }
  CHECK(voted > 1000);

  std::string report = [&] {
    std::ifstream in(p.report_json_file());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  }();
  CHECK(report.find("\"miou\": 1.0") != std::string::npos);

  SUBCASE("the vote summary accounts for every point") {
    std::ifstream in(p.summary_file());
    REQUIRE(in);
    nlohmann::json summary;
    in >> summary;
    CHECK(summary["estimator"] == "hard_sum");
    CHECK(summary["points"].get<std::size_t>() == cloud.size());
    CHECK(summary["voted_points"].get<std::size_t>() == voted);
    std::size_t histogram_total = 0;
    for (const auto& [votes, count] : summary["vote_histogram"].items())
      histogram_total += count.get<std::size_t>();
    CHECK(histogram_total == cloud.size());
  }
}

TEST_CASE("fresh caches are reused and parameter changes invalidate them") {
  TempDir tmp("cache");
  auto cfg = config_in(tmp.path, small_config());
  {
    pipeline::Pipeline p(cfg);
    p.set_quiet(true);
    p.run();
  }
  auto cloud_t = mtime(tmp.path / "work" / "cloud" / "cloud.bin");
  auto view_t = mtime(tmp.path / "work" / "views" / "view_000000.png");
  auto labels_file =
      tmp.path / "work" / "labels" / "pseudo_labels_hard_sum.bin";
  auto labels_t = mtime(labels_file);

  SUBCASE("an identical re-run touches nothing") {
    pipeline::Pipeline p(cfg);
    p.set_quiet(true);
    p.run();
    CHECK(mtime(tmp.path / "work" / "cloud" / "cloud.bin") == cloud_t);
    CHECK(mtime(tmp.path / "work" / "views" / "view_000000.png") == view_t);
    CHECK(mtime(labels_file) == labels_t);
  }

  SUBCASE("a render parameter re-renders but keeps the cloud") {
    auto cfg2 = config_in(tmp.path, small_config("render.splat_radius = 2\n"));
    pipeline::Pipeline p(cfg2);
    p.set_quiet(true);
    p.run();
    CHECK(mtime(tmp.path / "work" / "cloud" / "cloud.bin") == cloud_t);
    CHECK(mtime(tmp.path / "work" / "views" / "view_000000.png") != view_t);
    CHECK(mtime(labels_file) != labels_t);
  }

  SUBCASE("switching the estimator reuses renders and accumulators") {
    auto votes_t = mtime(tmp.path / "work" / "votes" / "votes.bin");
    pipeline::RunOptions opts;
    opts.estimator = vote::Estimator::soft_sum;
    pipeline::Pipeline p(cfg, opts);
    p.set_quiet(true);
    p.vote();
    CHECK(mtime(tmp.path / "work" / "views" / "view_000000.png") == view_t);
    CHECK(mtime(tmp.path / "work" / "votes" / "votes.bin") == votes_t);
    CHECK(fs::exists(tmp.path / "work" / "labels" /
                     "pseudo_labels_soft_sum.bin"));
    CHECK(fs::exists(labels_file));
  }

  SUBCASE("--force recomputes") {
    pipeline::RunOptions opts;
    opts.force = true;
    pipeline::Pipeline p(cfg, opts);
    p.set_quiet(true);
    p.align();
    CHECK(mtime(tmp.path / "work" / "cloud" / "cloud.bin") != cloud_t);
  }
}

TEST_CASE("pipeline output is reproducible across runs and worker counts") {
  TempDir a("det_a"), b("det_b"), c("det_c");
  auto make = [](const fs::path& dir, int workers) {
    auto cfg = config_in(dir, small_config("oracle.flip_rate = 0.25\n"
                                           "vote.estimator = soft_sum\n"));
    pipeline::RunOptions opts;
    opts.workers = workers;
    pipeline::Pipeline p(cfg, opts);
    p.set_quiet(true);
    p.run();
    return p.labels_file();
  };
  auto la = slurp(make(a.path, 1));
  auto lb = slurp(make(b.path, 3));
  auto lc = slurp(make(c.path, 1));
  CHECK(la == lb);
  CHECK(la == lc);
  CHECK(la.size() > 0);
}

TEST_CASE("seed override changes the outputs") {
  TempDir a("seed_a"), b("seed_b");
  auto run_with = [](const fs::path& dir, uint64_t seed) {
    auto cfg = config_in(dir, small_config());
    pipeline::RunOptions opts;
    opts.seed_override = seed;
    pipeline::Pipeline p(cfg, opts);
    p.set_quiet(true);
    p.vote();
    return p.labels_file();
  };
  auto la = slurp(run_with(a.path, 100));
  auto lb = slurp(run_with(b.path, 200));
  CHECK(la != lb);
}

TEST_CASE("eval without ground truth is an explicit error") {
  TempDir tmp("nogt");
  // No paths.labels: the cloud carries no ground truth, so segmentation
  // must come from outside (the oracle would have nothing to read).
  auto cfg = pipeline::parse_config_text(
      small_config("segmenter.kind = external\n"
                   "paths.classes = data/classes.txt\n"),
      "t", tmp.path);
  REQUIRE(cfg.labels_dir.empty());
  pipeline::Pipeline p(cfg);
  p.set_quiet(true);
  p.render();

  seg::SegmentationResult res;
  res.width = cfg.camera_width;
  res.height = cfg.camera_height;
  res.num_classes = 5;
  res.labels = Image<uint16_t>(res.width, res.height, 1);
  res.logits.assign(static_cast<std::size_t>(res.width) * res.height * 5,
                    0.0f);
  for (std::size_t i = 0; i < res.labels.size(); ++i)
    res.logits[i * 5 + 1] = 10.0f;
  for (int i = 0; i < cfg.noise.count; ++i)
    seg::write_external_result(p.seg_dir(), i, res, false);
  seg::mark_results_ready(p.seg_dir());

  p.vote();  // fine: pseudo-labels need no ground truth
  CHECK(testutil::throws_with<PipelineError>([&] { p.eval(); },
                                             "no ground-truth"));
}

TEST_CASE("external segmenter failures carry the segment stage tag") {
  TempDir tmp("ext");
  auto cfg =
      config_in(tmp.path, small_config("segmenter.kind = external\n"
                                       "external.results_dir = results\n"));
  fs::create_directories(tmp.path / "results");
  pipeline::Pipeline p(cfg);
  p.set_quiet(true);
  try {
    p.vote();
    FAIL("expected a PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.stage() == "segment");
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
}

TEST_CASE("external results feed the vote stage") {
  TempDir tmp("ext2");
  auto cfg =
      config_in(tmp.path, small_config("segmenter.kind = external\n"
                                       "external.results_dir = results\n"));
  // Render views first, then play the external tool's role: constant
  // class-3 masks for every view.
  pipeline::Pipeline p(cfg);
  p.set_quiet(true);
  p.render();

  fs::create_directories(tmp.path / "results");
  seg::SegmentationResult res;
  res.width = cfg.camera_width;
  res.height = cfg.camera_height;
  res.num_classes = 5;
  res.labels = Image<uint16_t>(res.width, res.height, 3);
  res.logits.assign(static_cast<std::size_t>(res.width) * res.height * 5,
                    0.0f);
  for (std::size_t i = 0; i < res.labels.size(); ++i)
    res.logits[i * 5 + 3] = 10.0f;
  for (int i = 0; i < cfg.noise.count; ++i)
    seg::write_external_result(tmp.path / "results", i, res, false);
  seg::mark_results_ready(tmp.path / "results");

  p.vote();
  auto labels = vote::load_point_labels(p.labels_file());
  std::size_t voted = 0;
  for (uint16_t l : labels) {
    if (l == kUnlabeled) continue;
    ++voted;
    CHECK(l == 3);
  }
  CHECK(voted > 1000);
}

TEST_CASE("class merging is applied during evaluation") {
  TempDir tmp("merge");
  auto cfg = config_in(
      tmp.path, small_config("eval.merge = terrain->sidewalk\n"
                             "eval.unlabeled_policy = exclude\n"));
  pipeline::Pipeline p(cfg);
  p.set_quiet(true);
  p.run();
  std::ifstream in(p.report_json_file());
  std::string report((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
  CHECK(report.find("terrain") == std::string::npos);
  CHECK(report.find("sidewalk") != std::string::npos);

  SUBCASE("unknown merge names are rejected") {
    auto bad = config_in(tmp.path, small_config("eval.merge = tundra->road\n"));
    pipeline::Pipeline q(bad);
    q.set_quiet(true);
    CHECK(testutil::throws_with<PipelineError>([&] { q.eval(); }, "tundra"));
  }
}

}  // TEST_SUITE
