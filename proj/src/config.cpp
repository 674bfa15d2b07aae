// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace viewvote::pipeline {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& origin, long line, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError(origin, line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& origin, long line, const std::string& v) {
  try {
    std::size_t used = 0;
    long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ParseError(origin, line, "expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& origin, long line, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long i = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ParseError(origin, line, "expected an unsigned integer, got '" + v +
                                       "'");
  }
}

bool parse_bool(const std::string& origin, long line, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(origin, line, "expected true/false, got '" + v + "'");
}

std::vector<std::pair<std::string, std::string>> parse_merge(
    const std::string& origin, long line, const std::string& v) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(v);
  std::string entry;
  while (std::getline(ss, entry, ',')) {
    entry = trim(entry);
    if (entry.empty()) continue;
    auto arrow = entry.find("->");
    if (arrow == std::string::npos)
      throw ParseError(origin, line,
                       "merge entry '" + entry + "' is not 'from->to'");
    std::string from = trim(entry.substr(0, arrow));
    std::string to = trim(entry.substr(arrow + 2));
    if (from.empty() || to.empty())
      throw ParseError(origin, line,
                       "merge entry '" + entry + "' is not 'from->to'");
    out.emplace_back(from, to);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (segmenter_kind != "oracle" && segmenter_kind != "external")
    throw InvalidArgumentError("segmenter.kind must be oracle or external");
  noise.validate();
  intrinsics().validate();
  oracle.validate();
  eval_cfg.validate();
  if (splat_radius < 0)
    throw InvalidArgumentError("render.splat_radius must be >= 0");
  if (!(d_min > 0.0) || !(d_min < d_max))
    throw InvalidArgumentError("render depth range needs 0 < d_min < d_max");
  if (intensity.eta_min > intensity.eta_max)
    throw InvalidArgumentError("intensity.eta_min > intensity.eta_max");
  if (intensity.beta_max && intensity.beta_min > *intensity.beta_max)
    throw InvalidArgumentError("intensity.beta_min > intensity.beta_max");
  if (intensity.beta_max_percentile < 0.0 ||
      intensity.beta_max_percentile > 100.0)
    throw InvalidArgumentError("intensity.beta_max_percentile outside [0,100]");
  if (workers < 1)
    throw InvalidArgumentError("workers must be >= 1");
}

PipelineConfig parse_config_text(const std::string& text,
                                 const std::string& origin,
                                 const fs::path& base_dir) {
  PipelineConfig cfg;
  auto resolve = [](const std::string& p) -> fs::path { return p; };

  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin, line_no, "expected 'key = value'");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin, line_no, "empty key");

    if (key == "paths.scans") cfg.scans_dir = resolve(value);
    else if (key == "paths.poses") cfg.poses_file = resolve(value);
    else if (key == "paths.labels") cfg.labels_dir = resolve(value);
    else if (key == "paths.classes") cfg.classes_file = resolve(value);
    else if (key == "paths.work") cfg.work_dir = resolve(value);
    else if (key == "synth.enabled")
      cfg.synth_enabled = parse_bool(origin, line_no, value);
    else if (key == "synth.seed")
      cfg.synth_seed = parse_u64(origin, line_no, value);
    else if (key == "intensity.beta_min")
      cfg.intensity.beta_min = parse_double(origin, line_no, value);
    else if (key == "intensity.beta_max")
      cfg.intensity.beta_max = parse_double(origin, line_no, value);
    else if (key == "intensity.beta_max_percentile")
      cfg.intensity.beta_max_percentile = parse_double(origin, line_no, value);
    else if (key == "intensity.eta_min")
      cfg.intensity.eta_min = parse_double(origin, line_no, value);
    else if (key == "intensity.eta_max")
      cfg.intensity.eta_max = parse_double(origin, line_no, value);
    else if (key == "views.count")
      cfg.noise.count = static_cast<int>(parse_int(origin, line_no, value));
    else if (key == "views.theta_deg")
      cfg.noise.theta_deg = parse_double(origin, line_no, value);
    else if (key == "views.lambda_m")
      cfg.noise.lambda_m = parse_double(origin, line_no, value);
    else if (key == "views.gamma_m")
      cfg.noise.gamma_m = parse_double(origin, line_no, value);
    else if (key == "views.seed")
      cfg.noise.seed = parse_u64(origin, line_no, value);
    else if (key == "camera.width")
      cfg.camera_width = static_cast<int>(parse_int(origin, line_no, value));
    else if (key == "camera.height")
      cfg.camera_height = static_cast<int>(parse_int(origin, line_no, value));
    else if (key == "camera.focal")
      cfg.camera_focal = parse_double(origin, line_no, value);
    else if (key == "camera.cx")
      cfg.camera_cx = parse_double(origin, line_no, value);
    else if (key == "camera.cy")
      cfg.camera_cy = parse_double(origin, line_no, value);
    else if (key == "render.splat_radius")
      cfg.splat_radius = static_cast<int>(parse_int(origin, line_no, value));
    else if (key == "render.d_min")
      cfg.d_min = parse_double(origin, line_no, value);
    else if (key == "render.d_max")
      cfg.d_max = parse_double(origin, line_no, value);
    else if (key == "segmenter.kind") cfg.segmenter_kind = value;
    else if (key == "oracle.flip_rate")
      cfg.oracle.flip_rate = parse_double(origin, line_no, value);
    else if (key == "oracle.margin")
      cfg.oracle.margin = parse_double(origin, line_no, value);
    else if (key == "oracle.calibrated")
      cfg.oracle.calibrated = parse_bool(origin, line_no, value);
    else if (key == "oracle.seed")
      cfg.oracle.seed = parse_u64(origin, line_no, value);
    else if (key == "external.results_dir")
      cfg.external_results_dir = resolve(value);
    else if (key == "vote.estimator")
      cfg.estimator = vote::parse_estimator(value);
    else if (key == "vote.compound_mode")
      cfg.vote_params.compound_mode = vote::parse_compound_mode(value);
    else if (key == "vote.softmax_floor")
      cfg.vote_params.softmax_floor = parse_double(origin, line_no, value);
    else if (key == "vote.dedup_per_view")
      cfg.vote_params.dedup_per_view = parse_bool(origin, line_no, value);
    else if (key == "eval.lateral_crop")
      cfg.eval_cfg.lateral_crop = parse_double(origin, line_no, value);
    else if (key == "eval.height_crop")
      cfg.eval_cfg.height_crop = parse_double(origin, line_no, value);
    else if (key == "eval.unlabeled_policy")
      cfg.eval_cfg.unlabeled_policy = eval::parse_unlabeled_policy(value);
    else if (key == "eval.merge")
      cfg.merge_names = parse_merge(origin, line_no, value);
    else if (key == "workers")
      cfg.workers = static_cast<int>(parse_int(origin, line_no, value));
    else
      throw ParseError(origin, line_no, "unknown config key '" + key + "'");
  }

  // Relative paths (including the defaults) live next to the config file.
  if (!base_dir.empty()) {
    for (fs::path* p : {&cfg.scans_dir, &cfg.poses_file, &cfg.labels_dir,
                        &cfg.classes_file, &cfg.work_dir,
                        &cfg.external_results_dir})
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
  }
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string(),
                           path.has_parent_path() ? path.parent_path()
                                                  : fs::path("."));
}

}  // namespace viewvote::pipeline
