// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "viewvote/types.hpp"

namespace viewvote::cloud {

/// Intensity normalization parameters. When beta_max is unset, each scan is
/// clipped at the given percentile of its own intensities instead of a fixed
/// ceiling.
struct IntensityParams {
  double beta_min = 0.0;
  std::optional<double> beta_max;  // unset -> per-scan percentile
  double beta_max_percentile = 99.0;
  double eta_min = 0.0;
  double eta_max = 1.0;
};

/// Clamps a raw intensity into [beta_min, beta_max].
double clip_intensity(double intensity, double beta_min, double beta_max);

/// Affine min-max map of one scan's clipped intensities onto
/// [eta_min, eta_max]. A constant scan maps to eta_min everywhere.
std::vector<double> rescale_intensity(std::span<const double> clipped,
                                      double eta_min, double eta_max);

/// Nearest-rank percentile (q in [0, 100]) of a non-empty set of values.
double percentile(std::span<const double> values, double q);

/// Transforms every scan into the world frame and concatenates them. Point k
/// of the concatenated input lands at index k of the output; intensities go
/// through clip then per-scan rescale; source scan indices and ground truth
/// are carried through.
DensePointCloud align(const ScanSequence& seq, const IntensityParams& params);

}  // namespace viewvote::cloud
