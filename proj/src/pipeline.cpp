// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "viewvote/parallel.hpp"
#include "viewvote/rng.hpp"
#include "viewvote/scan_io.hpp"
#include "viewvote/synth.hpp"

namespace viewvote::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// --- cloud cache -------------------------------------------------------------

namespace {

constexpr char kCloudMagic[8] = {'V', 'V', 'C', 'L', 'O', 'U', 'D', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_cloud(const fs::path& path, const DensePointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kCloudMagic, 8);
  write_pod(out, static_cast<uint64_t>(cloud.size()));
  write_pod(out, static_cast<uint8_t>(cloud.has_gt() ? 1 : 0));
  write_pod(out, static_cast<uint16_t>(cloud.class_names.size()));
  write_pod(out, cloud.eta_min);
  write_pod(out, cloud.eta_max);
  for (const auto& name : cloud.class_names) {
    write_pod(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const auto& p : cloud.positions) {
    write_pod(out, p.x());
    write_pod(out, p.y());
    write_pod(out, p.z());
  }
  out.write(reinterpret_cast<const char*>(cloud.intensity_norm.data()),
            static_cast<std::streamsize>(cloud.intensity_norm.size() * 8));
  out.write(reinterpret_cast<const char*>(cloud.source_scan.data()),
            static_cast<std::streamsize>(cloud.source_scan.size() * 4));
  if (cloud.has_gt())
    out.write(reinterpret_cast<const char*>(cloud.gt_class.data()),
              static_cast<std::streamsize>(cloud.gt_class.size() * 2));
  if (!out) throw IoError("write failed: " + path.string());
}

DensePointCloud load_cloud(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCloudMagic, 8) != 0)
    throw ParseError("not a cloud cache: " + path.string());

  uint64_t m = 0;
  uint8_t has_gt = 0;
  uint16_t n_classes = 0;
  DensePointCloud cloud;
  read_pod(in, m);
  read_pod(in, has_gt);
  read_pod(in, n_classes);
  read_pod(in, cloud.eta_min);
  read_pod(in, cloud.eta_max);
  for (uint16_t c = 0; c < n_classes; ++c) {
    uint16_t len = 0;
    read_pod(in, len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    cloud.class_names.push_back(std::move(name));
  }
  cloud.positions.resize(m);
  for (auto& p : cloud.positions) {
    read_pod(in, p.x());
    read_pod(in, p.y());
    read_pod(in, p.z());
  }
  cloud.intensity_norm.resize(m);
  in.read(reinterpret_cast<char*>(cloud.intensity_norm.data()),
          static_cast<std::streamsize>(m * 8));
  cloud.source_scan.resize(m);
  in.read(reinterpret_cast<char*>(cloud.source_scan.data()),
          static_cast<std::streamsize>(m * 4));
  if (has_gt) {
    cloud.gt_class.resize(m);
    in.read(reinterpret_cast<char*>(cloud.gt_class.data()),
            static_cast<std::streamsize>(m * 2));
  }
  if (!in) throw ParseError("truncated cloud cache: " + path.string());
  return cloud;
}

// --- cache keys & manifests --------------------------------------------------

namespace {

class KeyBuilder {
 public:
  explicit KeyBuilder(std::string_view stage) { add(stage); }

  KeyBuilder& add(std::string_view s) {
    bytes(s.data(), s.size());
    sep();
    return *this;
  }
  KeyBuilder& add(const std::string& s) {
    return add(std::string_view(s));
  }
  KeyBuilder& add(const fs::path& p) {
    return add(std::string_view(p.native()));
  }
  KeyBuilder& add(double d) {
    bytes(&d, sizeof(d));
    sep();
    return *this;
  }
  KeyBuilder& add(uint64_t v) {
    bytes(&v, sizeof(v));
    sep();
    return *this;
  }
  KeyBuilder& add(int v) { return add(static_cast<uint64_t>(v)); }
  KeyBuilder& add(bool v) { return add(static_cast<uint64_t>(v ? 1 : 0)); }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }
  void sep() {
    h_ ^= 0x1F;
    h_ *= 1099511628211ULL;
  }

  uint64_t h_ = 14695981039346656037ULL;
};

uint64_t fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

bool manifest_fresh(const fs::path& manifest_path, const std::string& key) {
  std::ifstream in(manifest_path);
  if (!in) return false;
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return false;
  }
  if (!j.contains("key") || j["key"] != key) return false;
  if (j.contains("files"))
    for (const auto& f : j["files"])
      if (!fs::exists(fs::path(f.get<std::string>()))) return false;
  return true;
}

void write_manifest(const fs::path& manifest_path, const std::string& stage,
                    const std::string& key,
                    const std::vector<std::string>& files) {
  json j;
  j["stage"] = stage;
  j["key"] = key;
  j["files"] = files;
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write manifest: " + manifest_path.string());
  out << j.dump(1) << "\n";
}

std::string view_name(int index, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "view_%06d%s", index, suffix);
  return buf;
}

std::vector<fs::path> list_sorted(const fs::path& dir,
                                  std::initializer_list<const char*> exts) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    for (const char* e : exts)
      if (ext == e) {
        files.push_back(entry.path());
        break;
      }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

// --- pipeline ----------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config, RunOptions options)
    : config_(std::move(config)), options_(options) {
  if (options_.workers) config_.workers = *options_.workers;
  if (options_.estimator) config_.estimator = *options_.estimator;
  if (options_.seed_override) {
    config_.noise.seed = *options_.seed_override;
    config_.oracle.seed = Rng::derive(*options_.seed_override, 1);
  }
  config_.validate();
}

fs::path Pipeline::cloud_file() const {
  return config_.work_dir / "cloud" / "cloud.bin";
}
fs::path Pipeline::views_dir() const { return config_.work_dir / "views"; }
fs::path Pipeline::seg_dir() const {
  if (config_.segmenter_kind == "external" &&
      !config_.external_results_dir.empty())
    return config_.external_results_dir;
  return config_.work_dir / "seg";
}
fs::path Pipeline::labels_file() const {
  return config_.work_dir / "labels" /
         ("pseudo_labels_" + vote::to_string(config_.estimator) + ".bin");
}
fs::path Pipeline::summary_file() const {
  return config_.work_dir / "labels" /
         ("summary_" + vote::to_string(config_.estimator) + ".json");
}
fs::path Pipeline::report_json_file() const {
  return config_.work_dir / "report.json";
}

template <typename Fn>
std::string Pipeline::run_stage(const char* name, Fn&& fn) {
  if (auto it = stage_keys_.find(name); it != stage_keys_.end())
    return it->second;
  try {
    std::string key = fn();
    stage_keys_[name] = key;
    return key;
  } catch (const PipelineError&) {
    throw;  // keep the original failing stage's tag
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

std::string Pipeline::synth() {
  return run_stage("synth", [this] { return synth_impl(); });
}
std::string Pipeline::align() {
  return run_stage("align", [this] { return align_impl(); });
}
std::string Pipeline::render() {
  return run_stage("render", [this] { return render_impl(); });
}
std::string Pipeline::segment() {
  return run_stage("segment", [this] { return segment_impl(); });
}
std::string Pipeline::vote() {
  return run_stage("vote", [this] { return vote_impl(); });
}
std::string Pipeline::eval() {
  return run_stage("eval", [this] { return eval_impl(); });
}

void Pipeline::run() {
  vote();
  bool has_gt = !config_.labels_dir.empty();
  if (has_gt) {
    eval();
  } else if (!quiet_) {
    std::cout << "[eval] skipped (no ground-truth labels configured)\n";
  }
}

std::string Pipeline::synth_impl() {
  if (!config_.synth_enabled) return "";
  fs::path stage_dir = config_.work_dir / "synth";
  fs::create_directories(stage_dir);

  std::string key = KeyBuilder("synth/1")
                        .add(config_.synth_seed)
                        .add(config_.scans_dir)
                        .add(config_.poses_file)
                        .add(config_.labels_dir)
                        .add(config_.classes_file)
                        .hex();
  fs::path manifest = stage_dir / "manifest.json";
  if (!options_.force && manifest_fresh(manifest, key)) {
    if (!quiet_) std::cout << "[synth] cached\n";
    return key;
  }

  synth::SceneSpec spec = synth::default_scene(config_.synth_seed);
  ScanSequence seq = synth::generate(spec, config_.workers);
  cloud::save_sequence(seq, config_.scans_dir, config_.poses_file,
                       config_.labels_dir, config_.classes_file);

  std::vector<std::string> files;
  for (const auto& f : list_sorted(config_.scans_dir, {".bin"}))
    files.push_back(f.string());
  files.push_back(config_.poses_file.string());
  if (!config_.labels_dir.empty())
    for (const auto& f : list_sorted(config_.labels_dir, {".labels"}))
      files.push_back(f.string());
  if (!config_.classes_file.empty())
    files.push_back(config_.classes_file.string());
  write_manifest(manifest, "synth", key, files);

  std::size_t points = 0;
  for (const auto& s : seq.scans) points += s.size();
  if (!quiet_)
    std::cout << "[synth] " << seq.scans.size() << " scans, " << points
              << " points\n";
  return key;
}

std::string Pipeline::input_content_key() const {
  KeyBuilder kb("inputs/1");
  for (const auto& f : list_sorted(config_.scans_dir, {".bin", ".ply"})) {
    kb.add(f.filename().string());
    kb.add(fnv1a_file(f));
  }
  kb.add(fnv1a_file(config_.poses_file));
  if (!config_.labels_dir.empty())
    for (const auto& f : list_sorted(config_.labels_dir, {".labels"})) {
      kb.add(f.filename().string());
      kb.add(fnv1a_file(f));
    }
  if (!config_.classes_file.empty())
    kb.add(fnv1a_file(config_.classes_file));
  return kb.hex();
}

std::string Pipeline::align_impl() {
  synth();
  if (!fs::is_directory(config_.scans_dir))
    throw IoError("scan directory not found: " + config_.scans_dir.string() +
                  " (enable synth.enabled or point paths.scans at data)");

  std::string key = KeyBuilder("align/1")
                        .add(input_content_key())
                        .add(config_.intensity.beta_min)
                        .add(config_.intensity.beta_max.has_value())
                        .add(config_.intensity.beta_max.value_or(0.0))
                        .add(config_.intensity.beta_max_percentile)
                        .add(config_.intensity.eta_min)
                        .add(config_.intensity.eta_max)
                        .hex();
  fs::path stage_dir = config_.work_dir / "cloud";
  fs::create_directories(stage_dir);
  fs::path manifest = stage_dir / "manifest.json";
  if (!options_.force && manifest_fresh(manifest, key)) {
    if (!quiet_) std::cout << "[align] cached\n";
    return key;
  }

  ScanSequence seq =
      cloud::load_sequence(config_.scans_dir, config_.poses_file,
                           config_.labels_dir, config_.classes_file);
  DensePointCloud cloud = cloud::align(seq, config_.intensity);
  save_cloud(cloud_file(), cloud);
  write_manifest(manifest, "align", key, {cloud_file().string()});
  if (!quiet_)
    std::cout << "[align] " << cloud.size() << " points from "
              << seq.scans.size() << " scans\n";
  return key;
}

std::string Pipeline::render_impl() {
  std::string align_key = align();

  KeyBuilder kb("render/1");
  kb.add(align_key)
      .add(config_.noise.count)
      .add(config_.noise.theta_deg)
      .add(config_.noise.lambda_m)
      .add(config_.noise.gamma_m)
      .add(config_.noise.seed)
      .add(config_.camera_width)
      .add(config_.camera_height)
      .add(config_.intrinsics().focal)
      .add(config_.intrinsics().cx)
      .add(config_.intrinsics().cy)
      .add(config_.splat_radius)
      .add(config_.d_min)
      .add(config_.d_max);
  std::string key = kb.hex();

  fs::path dir = views_dir();
  fs::create_directories(dir);
  fs::path manifest = dir / "manifest.json";
  if (!options_.force && manifest_fresh(manifest, key)) {
    if (!quiet_) std::cout << "[render] cached\n";
    return key;
  }

  DensePointCloud cloud = load_cloud(cloud_file());
  std::vector<Pose> trajectory = cloud::load_poses(config_.poses_file);
  std::vector<Pose> poses = view::sample_poses(trajectory, config_.noise);
  cloud::save_poses(dir / "virtual_poses.txt", poses);

  view::CameraIntrinsics intr = config_.intrinsics();
  parallel_for(poses.size(), config_.workers, [&](std::size_t i) {
    view::RenderedView v = view::render(cloud, poses[i], intr,
                                        config_.splat_radius, config_.d_min,
                                        config_.d_max);
    v.view_index = static_cast<int>(i);
    view::export_view(v, dir);
  });

  std::vector<std::string> files{(dir / "virtual_poses.txt").string()};
  for (std::size_t i = 0; i < poses.size(); ++i)
    for (const char* suffix : {".png", ".meta", ".idx", ".depth"})
      files.push_back((dir / view_name(static_cast<int>(i), suffix)).string());
  write_manifest(manifest, "render", key, files);
  if (!quiet_) std::cout << "[render] " << poses.size() << " views\n";
  return key;
}

std::string Pipeline::segment_impl() {
  std::string render_key = render();
  fs::path dir = seg_dir();
  const int k_views = config_.noise.count;

  if (config_.segmenter_kind == "external") {
    // Results are produced out of process; this stage validates the batch.
    if (!fs::is_directory(dir))
      throw SegmentationError("segmentation result directory not found: " +
                              dir.string());
    if (!fs::exists(dir / seg::kResultsReadyMarker))
      throw SegmentationError(
          "external results incomplete: missing " +
          (dir / seg::kResultsReadyMarker).string() +
          " (run the external 2D model over the rendered views first)");
    for (int i = 0; i < k_views; ++i)
      if (!fs::exists(dir / seg::labels_filename(i)))
        throw SegmentationError("missing segmentation for view " +
                                std::to_string(i) + ": " +
                                (dir / seg::labels_filename(i)).string());

    KeyBuilder kb("segment/1");
    kb.add(render_key).add("external").add(dir);
    for (int i = 0; i < k_views; ++i) {
      kb.add(fnv1a_file(dir / seg::labels_filename(i)));
      fs::path logits = dir / seg::logits_filename(i);
      kb.add(fs::exists(logits) ? fnv1a_file(logits) : 0);
    }
    kb.add(config_.oracle.margin);  // synthesized one-hot scale
    std::string key = kb.hex();
    write_manifest(dir / "manifest.json", "segment", key, {});
    if (!quiet_)
      std::cout << "[segment] external results validated (" << k_views
                << " views)\n";
    return key;
  }

  std::string align_key = align();
  std::string key = KeyBuilder("segment/1")
                        .add(render_key)
                        .add(align_key)
                        .add("oracle")
                        .add(config_.oracle.flip_rate)
                        .add(config_.oracle.margin)
                        .add(config_.oracle.calibrated)
                        .add(config_.oracle.seed)
                        .hex();
  fs::create_directories(dir);
  fs::path manifest = dir / "manifest.json";
  if (!options_.force && manifest_fresh(manifest, key)) {
    if (!quiet_) std::cout << "[segment] cached\n";
    return key;
  }

  DensePointCloud cloud = load_cloud(cloud_file());
  if (cloud.num_classes() == 0)
    throw SegmentationError(
        "no class names available; configure paths.classes");
  seg::OracleSegmenter oracle(cloud, config_.oracle);
  const int num_classes = static_cast<int>(cloud.num_classes());
  const bool with_logits = config_.oracle.calibrated;

  parallel_for(static_cast<std::size_t>(k_views), config_.workers,
               [&](std::size_t i) {
                 view::RenderedView v =
                     view::import_view(views_dir(), static_cast<int>(i));
                 seg::SegmentationResult res = oracle.segment(v, num_classes);
                 seg::write_external_result(dir, static_cast<int>(i), res,
                                            with_logits);
               });
  seg::mark_results_ready(dir);

  std::vector<std::string> files{(dir / seg::kResultsReadyMarker).string()};
  for (int i = 0; i < k_views; ++i) {
    files.push_back((dir / seg::labels_filename(i)).string());
    if (with_logits) files.push_back((dir / seg::logits_filename(i)).string());
  }
  write_manifest(manifest, "segment", key, files);
  if (!quiet_)
    std::cout << "[segment] oracle labeled " << k_views << " views\n";
  return key;
}

std::string Pipeline::vote_impl() {
  std::string segment_key = segment();
  std::string align_key = align();

  std::string votes_key = KeyBuilder("votes/1")
                              .add(segment_key)
                              .add(align_key)
                              .add(to_string(config_.vote_params.compound_mode))
                              .add(config_.vote_params.softmax_floor)
                              .add(config_.vote_params.dedup_per_view)
                              .hex();
  std::string labels_key = KeyBuilder("labels/1")
                               .add(votes_key)
                               .add(to_string(config_.estimator))
                               .hex();

  fs::path votes_dir = config_.work_dir / "votes";
  fs::path labels_dir = config_.work_dir / "labels";
  fs::create_directories(votes_dir);
  fs::create_directories(labels_dir);
  fs::path votes_manifest = votes_dir / "manifest.json";
  fs::path labels_manifest =
      labels_dir /
      ("manifest_" + vote::to_string(config_.estimator) + ".json");

  if (!options_.force && manifest_fresh(labels_manifest, labels_key)) {
    if (!quiet_) std::cout << "[vote] cached\n";
    return labels_key;
  }

  DensePointCloud cloud = load_cloud(cloud_file());
  std::size_t num_classes = cloud.num_classes();
  if (num_classes == 0)
    throw InvalidArgumentError(
        "no class names available; configure paths.classes");

  vote::VoteTable table(0, 1);
  bool have_table = false;
  if (!options_.force && manifest_fresh(votes_manifest, votes_key)) {
    table = vote::VoteTable::load(votes_dir / "votes.bin");
    have_table = true;
    if (!quiet_) std::cout << "[vote] accumulators cached\n";
  }

  if (!have_table) {
    table = vote::VoteTable(cloud.size(), static_cast<int>(num_classes),
                            config_.vote_params);
    seg::ExternalSegmenter reader(seg_dir(), config_.oracle.margin);
    const int k_views = config_.noise.count;

    ordered_produce_consume<vote::ViewContributions>(
        static_cast<std::size_t>(k_views), config_.workers,
        [&](std::size_t i) {
          view::RenderedView v =
              view::import_view(views_dir(), static_cast<int>(i));
          seg::SegmentationResult res =
              reader.segment(v, static_cast<int>(num_classes));
          return vote::backproject(v, res);
        },
        [&](std::size_t, vote::ViewContributions&& contrib) {
          table.accumulate(contrib);
        });

    table.save(votes_dir / "votes.bin");
    write_manifest(votes_manifest, "votes", votes_key,
                   {(votes_dir / "votes.bin").string()});
  }

  vote::PointLabels labels = table.elect(config_.estimator);
  vote::save_point_labels(labels_file(), labels.labels);

  // Vote-count histogram + coverage summary.
  std::map<uint32_t, std::size_t> histogram;
  std::size_t voted = 0;
  for (std::size_t p = 0; p < table.num_points(); ++p) {
    ++histogram[table.vote_count(p)];
    if (table.vote_count(p) > 0) ++voted;
  }
  json summary;
  summary["estimator"] = vote::to_string(config_.estimator);
  summary["points"] = table.num_points();
  summary["voted_points"] = voted;
  summary["coverage"] =
      table.num_points() == 0
          ? 0.0
          : static_cast<double>(voted) / static_cast<double>(table.num_points());
  json hist = json::object();
  for (const auto& [votes, count] : histogram)
    hist[std::to_string(votes)] = count;
  summary["vote_histogram"] = hist;
  {
    std::ofstream out(summary_file());
    if (!out) throw IoError("cannot write " + summary_file().string());
    out << summary.dump(2) << "\n";
  }

  write_manifest(labels_manifest, "labels", labels_key,
                 {labels_file().string(), summary_file().string()});
  if (!quiet_)
    std::cout << "[vote] " << voted << "/" << table.num_points()
              << " points labeled (" << vote::to_string(config_.estimator)
              << ")\n";
  return labels_key;
}

std::string Pipeline::eval_impl() {
  std::string labels_key = vote();
  if (config_.labels_dir.empty())
    throw InvalidArgumentError(
        "no ground-truth labels configured (paths.labels); nothing to "
        "evaluate against");

  KeyBuilder kb("eval/1");
  kb.add(labels_key)
      .add(config_.eval_cfg.lateral_crop)
      .add(config_.eval_cfg.height_crop)
      .add(to_string(config_.eval_cfg.unlabeled_policy));
  for (const auto& [from, to] : config_.merge_names) kb.add(from).add(to);
  std::string key = kb.hex();

  fs::path manifest = config_.work_dir / "eval_manifest.json";
  if (!options_.force && manifest_fresh(manifest, key)) {
    if (!quiet_) std::cout << "[eval] cached\n";
    return key;
  }

  DensePointCloud cloud = load_cloud(cloud_file());
  if (!cloud.has_gt())
    throw InvalidArgumentError("aligned cloud carries no ground truth");
  std::vector<uint16_t> pred = vote::load_point_labels(labels_file());
  if (pred.size() != cloud.size())
    throw InvalidArgumentError("pseudo-label file does not match cloud size");

  // Resolve merge names against the class list.
  eval::EvalConfig ecfg = config_.eval_cfg;
  ecfg.class_merge.clear();
  auto class_index = [&](const std::string& name) -> uint16_t {
    auto it = std::find(cloud.class_names.begin(), cloud.class_names.end(),
                        name);
    if (it == cloud.class_names.end())
      throw InvalidArgumentError("eval.merge references unknown class '" +
                                 name + "'");
    return static_cast<uint16_t>(it - cloud.class_names.begin());
  };
  for (const auto& [from, to] : config_.merge_names)
    ecfg.class_merge.emplace_back(class_index(from), class_index(to));

  std::vector<Pose> trajectory = cloud::load_poses(config_.poses_file);
  std::vector<bool> mask = eval::crop_mask(cloud, trajectory, ecfg);

  std::vector<uint16_t> pred_kept, gt_kept;
  pred_kept.reserve(cloud.size());
  gt_kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!mask[i]) continue;
    pred_kept.push_back(pred[i]);
    gt_kept.push_back(cloud.gt_class[i]);
  }
  pred_kept = eval::merge_classes(pred_kept, ecfg.class_merge,
                                  cloud.num_classes());
  gt_kept =
      eval::merge_classes(gt_kept, ecfg.class_merge, cloud.num_classes());

  eval::EvalReport report = eval::compute_iou(
      pred_kept, gt_kept, cloud.num_classes(), ecfg.unlabeled_policy);

  eval::save_report_json(report_json_file(), report, cloud.class_names);
  eval::save_report_csv(config_.work_dir / "report.csv", report,
                        cloud.class_names);
  {
    std::ofstream out(config_.work_dir / "report.txt");
    if (!out) throw IoError("cannot write report.txt");
    out << eval::report_text(report, cloud.class_names);
  }
  write_manifest(manifest, "eval", key,
                 {report_json_file().string(),
                  (config_.work_dir / "report.csv").string(),
                  (config_.work_dir / "report.txt").string()});
  if (!quiet_) {
    std::cout << "[eval] miou=" << report.miou
              << " coverage=" << report.coverage << " ("
              << report.evaluated_points << " points in crop)\n";
  }
  return key;
}

}  // namespace viewvote::pipeline
