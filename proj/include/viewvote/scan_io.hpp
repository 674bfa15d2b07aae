// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "viewvote/types.hpp"

namespace viewvote::cloud {

enum class ScanFormat {
  auto_detect,  // by extension: .bin -> binary, .ply -> ascii ply
  binary,       // headerless little-endian float32 (x, y, z, intensity)
  ply,          // ascii PLY with x, y, z, intensity vertex properties
};

/// Loads one scan file.
RawScan load_scan_file(const std::filesystem::path& path,
                       ScanFormat format = ScanFormat::auto_detect);

/// Loads every scan in a directory. Files are matched by extension
/// (.bin/.ply) and sorted lexicographically; the sort order defines
/// scan_index.
std::vector<RawScan> load_scans(const std::filesystem::path& dir,
                                ScanFormat format = ScanFormat::auto_detect);

/// Parses a pose file: one line per scan, 12 whitespace-separated values
/// forming a row-major 3x4 [R|t]. Rotations are re-checked for
/// orthonormality.
std::vector<Pose> load_poses(const std::filesystem::path& path);

/// Per-scan ground-truth labels: one binary little-endian uint16 per point,
/// in scan file order; 65535 marks unlabeled.
std::vector<uint16_t> load_label_file(const std::filesystem::path& path);

/// One class name per line; order defines class indices.
std::vector<std::string> load_class_names(const std::filesystem::path& path);

/// Assembles a full sequence from a scan directory, pose file, and optional
/// label directory (files named <scan stem>.labels) and class-name file.
ScanSequence load_sequence(const std::filesystem::path& scans_dir,
                           const std::filesystem::path& poses_file,
                           const std::filesystem::path& labels_dir = {},
                           const std::filesystem::path& classes_file = {});

// Writers for the same formats (used by the synthetic generator and tests).
void save_scan_file(const std::filesystem::path& path, const RawScan& scan);
void save_poses(const std::filesystem::path& path,
                const std::vector<Pose>& poses);
void save_label_file(const std::filesystem::path& path,
                     const std::vector<uint16_t>& labels);
void save_class_names(const std::filesystem::path& path,
                      const std::vector<std::string>& names);
void save_sequence(const ScanSequence& seq,
                   const std::filesystem::path& scans_dir,
                   const std::filesystem::path& poses_file,
                   const std::filesystem::path& labels_dir,
                   const std::filesystem::path& classes_file);

}  // namespace viewvote::cloud
