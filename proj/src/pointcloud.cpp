// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/pointcloud.hpp"

#include <algorithm>
#include <cmath>

namespace viewvote::cloud {

double clip_intensity(double intensity, double beta_min, double beta_max) {
  if (beta_min > beta_max)
    throw InvalidArgumentError("clip_intensity: beta_min > beta_max");
  return std::min(std::max(intensity, beta_min), beta_max);
}

std::vector<double> rescale_intensity(std::span<const double> clipped,
                                      double eta_min, double eta_max) {
  if (clipped.empty())
    throw InvalidArgumentError("rescale_intensity: empty intensity array");
  if (eta_min > eta_max)
    throw InvalidArgumentError("rescale_intensity: eta_min > eta_max");

  auto [lo_it, hi_it] = std::minmax_element(clipped.begin(), clipped.end());
  double lo = *lo_it, hi = *hi_it;

  std::vector<double> out(clipped.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), eta_min);
    return out;
  }
  double scale = (eta_max - eta_min) / (hi - lo);
  for (std::size_t i = 0; i < clipped.size(); ++i)
    out[i] = (clipped[i] - lo) * scale + eta_min;
  return out;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidArgumentError("percentile: empty array");
  if (q < 0.0 || q > 100.0)
    throw InvalidArgumentError("percentile: q outside [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Nearest-rank: smallest value with at least q% of the data at or below it.
  auto rank = static_cast<std::size_t>(
      std::ceil(q / 100.0 * static_cast<double>(sorted.size())));
  if (rank > 0) --rank;
  return sorted[std::min(rank, sorted.size() - 1)];
}

DensePointCloud align(const ScanSequence& seq, const IntensityParams& params) {
  seq.validate();
  if (params.eta_min > params.eta_max)
    throw InvalidArgumentError("align: eta_min > eta_max");

  std::size_t total = 0;
  for (const auto& scan : seq.scans) total += scan.size();

  bool any_gt = std::any_of(seq.scans.begin(), seq.scans.end(),
                            [](const RawScan& s) { return s.has_gt(); });

  DensePointCloud cloud;
  cloud.positions.reserve(total);
  cloud.intensity_norm.reserve(total);
  cloud.source_scan.reserve(total);
  if (any_gt) cloud.gt_class.reserve(total);
  cloud.class_names = seq.class_names;
  cloud.eta_min = params.eta_min;
  cloud.eta_max = params.eta_max;

  for (std::size_t m = 0; m < seq.scans.size(); ++m) {
    const RawScan& scan = seq.scans[m];
    const Pose& pose = seq.poses[m];
    if (scan.size() == 0) continue;

    double beta_max = params.beta_max
                          ? *params.beta_max
                          : percentile(scan.intensity,
                                       params.beta_max_percentile);
    // A scan whose percentile falls below beta_min clips to a constant.
    beta_max = std::max(beta_max, params.beta_min);

    std::vector<double> clipped(scan.size());
    for (std::size_t j = 0; j < scan.size(); ++j)
      clipped[j] = clip_intensity(scan.intensity[j], params.beta_min, beta_max);
    std::vector<double> rescaled =
        rescale_intensity(clipped, params.eta_min, params.eta_max);

    for (std::size_t j = 0; j < scan.size(); ++j) {
      cloud.positions.push_back(pose.apply(scan.points[j]));
      cloud.intensity_norm.push_back(rescaled[j]);
      cloud.source_scan.push_back(static_cast<uint32_t>(m));
      if (any_gt)
        cloud.gt_class.push_back(scan.has_gt() ? scan.gt_class[j]
                                               : kUnlabeled);
    }
  }
  return cloud;
}

}  // namespace viewvote::cloud
