// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/segmenter.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "viewvote/rng.hpp"

namespace viewvote::seg {

namespace fs = std::filesystem;

void SegmentationResult::validate_against(const view::RenderedView& view) const {
  if (width != view.intrinsics.width || height != view.intrinsics.height)
    throw SegmentationError(
        "result dimensions " + std::to_string(width) + "x" +
        std::to_string(height) + " do not match view " +
        std::to_string(view.intrinsics.width) + "x" +
        std::to_string(view.intrinsics.height));
  if (num_classes < 1) throw SegmentationError("result has no classes");
  if (labels.width != width || labels.height != height)
    throw SegmentationError("label map dimensions mismatch");
  if (logits.size() != static_cast<std::size_t>(width) * height * num_classes)
    throw SegmentationError("logit buffer size mismatch");

  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const float* row = logit_row(u, v);
      for (int c = 0; c < num_classes; ++c)
        if (!std::isfinite(row[c]))
          throw SegmentationError("non-finite logit at pixel (" +
                                  std::to_string(u) + ", " +
                                  std::to_string(v) + ")");
      if (labels.at(u, v) != argmax(row, num_classes))
        throw SegmentationError("label/argmax mismatch at pixel (" +
                                std::to_string(u) + ", " + std::to_string(v) +
                                ")");
    }
  }
}

OracleSegmenter::OracleSegmenter(const DensePointCloud& cloud,
                                 OracleParams params)
    : cloud_(&cloud), params_(params) {
  params_.validate();
  if (!cloud.has_gt())
    throw SegmentationError("oracle segmenter needs ground-truth classes");
}

SegmentationResult OracleSegmenter::segment(const view::RenderedView& view,
                                            int num_classes) const {
  if (num_classes < 1)
    throw InvalidArgumentError("segment: num_classes must be >= 1");

  const int w = view.intrinsics.width, h = view.intrinsics.height;
  SegmentationResult res;
  res.width = w;
  res.height = h;
  res.num_classes = num_classes;
  res.labels = Image<uint16_t>(w, h, 0);
  res.logits.assign(static_cast<std::size_t>(w) * h * num_classes, 0.0f);

  Rng rng(Rng::derive(params_.seed, static_cast<uint64_t>(view.view_index)));

  for (std::size_t idx = 0; idx < view.point_index.size(); ++idx) {
    uint32_t pi = view.point_index.data[idx];
    if (pi == kNoPoint) continue;
    uint16_t gt = cloud_->gt_class[pi];

    float* row = res.logits.data() + idx * num_classes;
    if (params_.calibrated) {
      // A point without ground truth gets no elevated class.
      for (int c = 0; c < num_classes; ++c)
        row[c] = static_cast<float>(
            rng.normal(gt != kUnlabeled && c == gt ? params_.margin : 0.0,
                       1.0));
      res.labels.data[idx] =
          static_cast<uint16_t>(SegmentationResult::argmax(row, num_classes));
    } else {
      int label;
      if (gt == kUnlabeled) {
        label = static_cast<int>(
            rng.uniform_index(static_cast<std::size_t>(num_classes)));
      } else {
        label = gt;
        bool flip = rng.next_double() < params_.flip_rate;
        if (flip && num_classes > 1) {
          std::size_t k = rng.uniform_index(
              static_cast<std::size_t>(num_classes) - 1);
          label = (static_cast<int>(k) >= gt) ? static_cast<int>(k) + 1
                                              : static_cast<int>(k);
        }
      }
      row[label] = static_cast<float>(params_.margin);
      res.labels.data[idx] = static_cast<uint16_t>(label);
    }
  }
  return res;
}

std::string labels_filename(int view_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "labels_%06d.png", view_index);
  return buf;
}

std::string logits_filename(int view_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "logits_%06d.bin", view_index);
  return buf;
}

void write_external_result(const fs::path& dir, int view_index,
                           const SegmentationResult& result,
                           bool with_logits) {
  fs::create_directories(dir);
  GreyImage labels(result.width, result.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    uint16_t c = result.labels.data[i];
    if (c > 255)
      throw SegmentationError(
          "exchange protocol carries at most 256 classes, got label " +
          std::to_string(c));
    labels.data[i] = static_cast<uint8_t>(c);
  }
  write_grey_png(dir / labels_filename(view_index), labels);

  if (with_logits) {
    fs::path path = dir / logits_filename(view_index);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(result.logits.data()),
              static_cast<std::streamsize>(result.logits.size() * 4));
    if (!out) throw IoError("write failed: " + path.string());
  }
}

void mark_results_ready(const fs::path& dir) {
  std::ofstream marker(dir / kResultsReadyMarker);
  if (!marker) throw IoError("cannot write marker in " + dir.string());
}

ExternalSegmenter::ExternalSegmenter(fs::path result_dir, double synth_margin)
    : result_dir_(std::move(result_dir)), synth_margin_(synth_margin) {
  if (!fs::is_directory(result_dir_))
    throw SegmentationError("segmentation result directory not found: " +
                            result_dir_.string());
  if (!fs::exists(result_dir_ / kResultsReadyMarker))
    throw SegmentationError(
        "external results incomplete: missing " +
        (result_dir_ / kResultsReadyMarker).string() +
        " (run the external 2D model over the rendered views first)");
}

SegmentationResult ExternalSegmenter::segment(const view::RenderedView& view,
                                              int num_classes) const {
  const int w = view.intrinsics.width, h = view.intrinsics.height;
  fs::path labels_path = result_dir_ / labels_filename(view.view_index);
  if (!fs::exists(labels_path))
    throw SegmentationError("missing segmentation for view " +
                            std::to_string(view.view_index) + ": " +
                            labels_path.string());

  GreyImage label_img = read_grey_png(labels_path);
  if (label_img.width != w || label_img.height != h)
    throw SegmentationError(
        "shape mismatch for view " + std::to_string(view.view_index) + ": " +
        std::to_string(label_img.width) + "x" +
        std::to_string(label_img.height) + " labels for a " +
        std::to_string(w) + "x" + std::to_string(h) + " view");

  SegmentationResult res;
  res.width = w;
  res.height = h;
  res.num_classes = num_classes;
  res.labels = Image<uint16_t>(w, h, 0);
  res.logits.assign(static_cast<std::size_t>(w) * h * num_classes, 0.0f);

  for (std::size_t i = 0; i < label_img.size(); ++i) {
    if (label_img.data[i] >= num_classes)
      throw SegmentationError("view " + std::to_string(view.view_index) +
                              ": label " + std::to_string(label_img.data[i]) +
                              " out of range for " +
                              std::to_string(num_classes) + " classes");
    res.labels.data[i] = label_img.data[i];
  }

  fs::path logits_path = result_dir_ / logits_filename(view.view_index);
  if (fs::exists(logits_path)) {
    std::ifstream in(logits_path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + logits_path.string());
    in.seekg(0, std::ios::end);
    auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::size_t expected = res.logits.size() * 4;
    if (bytes != expected)
      throw SegmentationError(
          "shape mismatch for view " + std::to_string(view.view_index) + ": " +
          logits_path.string() + " holds " + std::to_string(bytes) +
          " bytes, expected " + std::to_string(expected));
    in.read(reinterpret_cast<char*>(res.logits.data()),
            static_cast<std::streamsize>(expected));
    if (!in) throw IoError("short read: " + logits_path.string());

    for (std::size_t i = 0; i < res.logits.size(); ++i)
      if (!std::isfinite(res.logits[i]))
        throw SegmentationError("non-finite logit in " + logits_path.string());

    // Labels follow the logits so the argmax invariant holds even if the
    // provided mask disagrees (ties in external logits, post-processing).
    for (std::size_t i = 0; i < label_img.size(); ++i)
      res.labels.data[i] = static_cast<uint16_t>(SegmentationResult::argmax(
          res.logits.data() + i * num_classes, num_classes));
  } else {
    // One-hot logits synthesized from the labels at the configured margin.
    for (std::size_t i = 0; i < label_img.size(); ++i)
      res.logits[i * num_classes + res.labels.data[i]] =
          static_cast<float>(synth_margin_);
  }
  return res;
}

}  // namespace viewvote::seg
