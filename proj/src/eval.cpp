// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/eval.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace viewvote::eval {

namespace fs = std::filesystem;

UnlabeledPolicy parse_unlabeled_policy(const std::string& name) {
  if (name == "count_as_wrong") return UnlabeledPolicy::count_as_wrong;
  if (name == "exclude") return UnlabeledPolicy::exclude;
  throw InvalidArgumentError("unknown unlabeled policy '" + name +
                             "' (expected count_as_wrong or exclude)");
}

std::string to_string(UnlabeledPolicy p) {
  return p == UnlabeledPolicy::count_as_wrong ? "count_as_wrong" : "exclude";
}

std::vector<bool> crop_mask(const DensePointCloud& cloud,
                            const std::vector<Pose>& trajectory,
                            const EvalConfig& cfg) {
  cfg.validate();
  if (trajectory.empty())
    throw InvalidArgumentError("crop_mask: empty trajectory");

  std::vector<bool> mask(cloud.size(), false);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.positions[i];
    double best_sq = std::numeric_limits<double>::infinity();
    double best_z = 0.0;
    for (const Pose& pose : trajectory) {
      double dx = p.x() - pose.translation.x();
      double dy = p.y() - pose.translation.y();
      double d_sq = dx * dx + dy * dy;
      if (d_sq < best_sq) {
        best_sq = d_sq;
        best_z = pose.translation.z();
      }
    }
    mask[i] = best_sq <= cfg.lateral_crop * cfg.lateral_crop &&
              (p.z() - best_z) <= cfg.height_crop;
  }
  return mask;
}

std::vector<uint16_t> merge_classes(
    std::span<const uint16_t> labels,
    const std::vector<std::pair<uint16_t, uint16_t>>& mapping,
    std::size_t num_classes) {
  for (const auto& [from, to] : mapping)
    if (from >= num_classes || to >= num_classes)
      throw InvalidArgumentError(
          "merge_classes: mapping " + std::to_string(from) + "->" +
          std::to_string(to) + " references a class >= " +
          std::to_string(num_classes));

  // Single pass: build a lookup, then apply once (a->b, b->c leaves a as b).
  std::vector<uint16_t> lut(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    lut[c] = static_cast<uint16_t>(c);
  for (const auto& [from, to] : mapping) lut[from] = to;

  std::vector<uint16_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = labels[i] == kUnlabeled ? kUnlabeled : lut[labels[i]];
  return out;
}

EvalReport compute_iou(std::span<const uint16_t> pred,
                       std::span<const uint16_t> gt, std::size_t num_classes,
                       UnlabeledPolicy policy) {
  if (pred.size() != gt.size())
    throw InvalidArgumentError(
        "compute_iou: " + std::to_string(pred.size()) + " predictions for " +
        std::to_string(gt.size()) + " ground-truth labels");

  std::vector<uint64_t> tp(num_classes, 0), fp(num_classes, 0),
      fn(num_classes, 0);
  std::vector<bool> gt_present(num_classes, false);

  std::size_t evaluated = 0, labeled = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    uint16_t g = gt[i];
    if (g == kUnlabeled) continue;  // no ground truth, never evaluated
    if (g >= num_classes)
      throw InvalidArgumentError("compute_iou: ground-truth class " +
                                 std::to_string(g) + " out of range");
    ++evaluated;
    gt_present[g] = true;

    uint16_t q = pred[i];
    if (q == kUnlabeled) {
      if (policy == UnlabeledPolicy::count_as_wrong) ++fn[g];
      continue;
    }
    if (q >= num_classes)
      throw InvalidArgumentError("compute_iou: predicted class " +
                                 std::to_string(q) + " out of range");
    ++labeled;
    if (q == g) {
      ++tp[g];
    } else {
      ++fp[q];
      ++fn[g];
    }
  }

  EvalReport report;
  report.evaluated_points = evaluated;
  report.coverage = evaluated == 0
                        ? 0.0
                        : static_cast<double>(labeled) /
                              static_cast<double>(evaluated);

  double iou_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!gt_present[c]) continue;
    uint64_t denom = tp[c] + fp[c] + fn[c];
    double iou = denom == 0 ? 0.0
                            : static_cast<double>(tp[c]) /
                                  static_cast<double>(denom);
    report.iou_per_class[static_cast<uint16_t>(c)] = iou;
    iou_sum += iou;
    ++present;
  }
  report.miou = present == 0 ? 0.0 : iou_sum / static_cast<double>(present);
  return report;
}

namespace {

std::string class_label(uint16_t c, const std::vector<std::string>& names) {
  if (c < names.size()) return names[c];
  return "class_" + std::to_string(c);
}

}  // namespace

std::string report_text(const EvalReport& report,
                        const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  for (const auto& [c, iou] : report.iou_per_class)
    out << "iou." << class_label(c, class_names) << ": " << iou << "\n";
  out << "miou: " << report.miou << "\n";
  out << "coverage: " << report.coverage << "\n";
  out << "evaluated_points: " << report.evaluated_points << "\n";
  return out.str();
}

void save_report_json(const fs::path& path, const EvalReport& report,
                      const std::vector<std::string>& class_names) {
  nlohmann::json j;
  j["miou"] = report.miou;
  j["coverage"] = report.coverage;
  j["evaluated_points"] = report.evaluated_points;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, iou] : report.iou_per_class)
    per_class[class_label(c, class_names)] = iou;
  j["iou_per_class"] = per_class;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void save_report_csv(const fs::path& path, const EvalReport& report,
                     const std::vector<std::string>& class_names) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "class,iou\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& [c, iou] : report.iou_per_class)
    out << class_label(c, class_names) << "," << iou << "\n";
  out << "miou," << report.miou << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace viewvote::eval
