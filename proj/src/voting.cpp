// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include "viewvote/voting.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace viewvote::vote {

namespace fs = std::filesystem;

Estimator parse_estimator(const std::string& name) {
  if (name == "hard_sum") return Estimator::hard_sum;
  if (name == "soft_sum") return Estimator::soft_sum;
  if (name == "soft_compound") return Estimator::soft_compound;
  throw InvalidArgumentError(
      "unknown estimator '" + name +
      "' (expected hard_sum, soft_sum or soft_compound)");
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::hard_sum: return "hard_sum";
    case Estimator::soft_sum: return "soft_sum";
    case Estimator::soft_compound: return "soft_compound";
  }
  return "?";
}

CompoundMode parse_compound_mode(const std::string& name) {
  if (name == "log_softmax") return CompoundMode::log_softmax;
  if (name == "raw_product") return CompoundMode::raw_product;
  throw InvalidArgumentError("unknown compound mode '" + name +
                             "' (expected log_softmax or raw_product)");
}

std::string to_string(CompoundMode m) {
  return m == CompoundMode::log_softmax ? "log_softmax" : "raw_product";
}

ViewContributions backproject(const view::RenderedView& view,
                              const seg::SegmentationResult& result) {
  if (result.width != view.intrinsics.width ||
      result.height != view.intrinsics.height)
    throw InvalidArgumentError(
        "backproject: segmentation " + std::to_string(result.width) + "x" +
        std::to_string(result.height) + " does not match view " +
        std::to_string(view.intrinsics.width) + "x" +
        std::to_string(view.intrinsics.height));

  ViewContributions out;
  out.view_index = view.view_index;
  out.num_classes = result.num_classes;

  std::size_t non_empty = 0;
  for (uint32_t pi : view.point_index.data)
    if (pi != kNoPoint) ++non_empty;
  out.points.reserve(non_empty);
  out.labels.reserve(non_empty);
  out.logits.reserve(non_empty * result.num_classes);

  for (std::size_t idx = 0; idx < view.point_index.size(); ++idx) {
    uint32_t pi = view.point_index.data[idx];
    if (pi == kNoPoint) continue;
    out.points.push_back(pi);
    out.labels.push_back(result.labels.data[idx]);
    const float* row = result.logits.data() + idx * result.num_classes;
    out.logits.insert(out.logits.end(), row, row + result.num_classes);
  }
  return out;
}

VoteTable::VoteTable(std::size_t num_points, int num_classes,
                     VoteParams params)
    : num_points_(num_points),
      num_classes_(num_classes),
      params_(params),
      hard_counts_(num_points * num_classes, 0),
      logit_sums_(num_points * num_classes, 0.0),
      compound_(num_points * num_classes, 0.0),
      vote_count_(num_points, 0) {
  if (num_classes < 1)
    throw InvalidArgumentError("vote table: need at least one class");
  if (params.softmax_floor <= 0.0 || params.softmax_floor >= 1.0)
    throw InvalidArgumentError("vote table: softmax floor outside (0, 1)");
  if (params.dedup_per_view) view_stamp_.assign(num_points, 0);
}

void VoteTable::accumulate(const ViewContributions& contrib) {
  if (contrib.num_classes != num_classes_)
    throw InvalidArgumentError("accumulate: class count mismatch");
  if (contrib.view_index < last_view_index_)
    throw InvalidArgumentError(
        "accumulate: views must arrive in ascending view_index order");
  last_view_index_ = contrib.view_index;

  const int c_count = num_classes_;
  std::vector<double> probs(c_count);

  for (std::size_t j = 0; j < contrib.size(); ++j) {
    std::size_t p = contrib.points[j];
    uint16_t label = contrib.labels[j];
    if (p >= num_points_)
      throw InvalidArgumentError("accumulate: point index " +
                                 std::to_string(p) + " out of range");
    if (static_cast<int>(label) >= c_count)
      throw InvalidArgumentError("accumulate: class " + std::to_string(label) +
                                 " out of range");

    if (params_.dedup_per_view) {
      uint32_t stamp = static_cast<uint32_t>(contrib.view_index) + 1;
      if (view_stamp_[p] == stamp) continue;
      view_stamp_[p] = stamp;
    }

    const float* row = contrib.logits.data() + j * c_count;
    double* sums = logit_sums_.data() + p * c_count;
    double* comp = compound_.data() + p * c_count;

    hard_counts_[p * c_count + label] += 1;
    for (int c = 0; c < c_count; ++c) sums[c] += row[c];

    if (params_.compound_mode == CompoundMode::log_softmax) {
      double mx = row[0];
      for (int c = 1; c < c_count; ++c) mx = std::max(mx, double(row[c]));
      double denom = 0.0;
      for (int c = 0; c < c_count; ++c) {
        probs[c] = std::exp(double(row[c]) - mx);
        denom += probs[c];
      }
      for (int c = 0; c < c_count; ++c)
        comp[c] += std::log(std::max(probs[c] / denom, params_.softmax_floor));
    } else {
      // Raw logit product, reproducing the unnormalized compounding rule.
      // The first vote seeds the row so untouched rows stay all-zero.
      if (vote_count_[p] == 0) {
        for (int c = 0; c < c_count; ++c) comp[c] = double(row[c]);
      } else {
        for (int c = 0; c < c_count; ++c) comp[c] *= double(row[c]);
      }
    }
    vote_count_[p] += 1;
  }
}

PointLabels VoteTable::elect(Estimator estimator) const {
  PointLabels out;
  out.estimator_used = estimator;
  out.labels.assign(num_points_, kUnlabeled);

  for (std::size_t p = 0; p < num_points_; ++p) {
    if (vote_count_[p] == 0) continue;
    int best = 0;
    switch (estimator) {
      case Estimator::hard_sum: {
        const uint32_t* row = hard_counts_.data() + p * num_classes_;
        for (int c = 1; c < num_classes_; ++c)
          if (row[c] > row[best]) best = c;
        break;
      }
      case Estimator::soft_sum: {
        const double* row = logit_sums_.data() + p * num_classes_;
        for (int c = 1; c < num_classes_; ++c)
          if (row[c] > row[best]) best = c;
        break;
      }
      case Estimator::soft_compound: {
        const double* row = compound_.data() + p * num_classes_;
        for (int c = 1; c < num_classes_; ++c)
          if (row[c] > row[best]) best = c;
        break;
      }
    }
    out.labels[p] = static_cast<uint16_t>(best);
  }
  return out;
}

void VoteTable::validate() const {
  for (std::size_t p = 0; p < num_points_; ++p) {
    uint64_t row_sum = 0;
    for (int c = 0; c < num_classes_; ++c)
      row_sum += hard_count(p, c);
    if (row_sum != vote_count_[p])
      throw Error("vote table: hard count row " + std::to_string(p) +
                  " sums to " + std::to_string(row_sum) + ", expected " +
                  std::to_string(vote_count_[p]));
    if (vote_count_[p] == 0) {
      for (int c = 0; c < num_classes_; ++c)
        if (logit_sum(p, c) != 0.0 || compound(p, c) != 0.0)
          throw Error("vote table: zero-vote row " + std::to_string(p) +
                      " has non-zero accumulators");
    }
  }
}

namespace {
constexpr char kVotesMagic[8] = {'V', 'V', 'V', 'O', 'T', 'E', 'S', '1'};
}

void VoteTable::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  uint64_t m = num_points_;
  uint32_t c = static_cast<uint32_t>(num_classes_);
  uint8_t mode = params_.compound_mode == CompoundMode::raw_product ? 1 : 0;
  uint8_t dedup = params_.dedup_per_view ? 1 : 0;
  out.write(kVotesMagic, 8);
  out.write(reinterpret_cast<const char*>(&m), 8);
  out.write(reinterpret_cast<const char*>(&c), 4);
  out.write(reinterpret_cast<const char*>(&mode), 1);
  out.write(reinterpret_cast<const char*>(&dedup), 1);
  out.write(reinterpret_cast<const char*>(&params_.softmax_floor), 8);
  auto write_vec = [&out](const auto& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() *
                                           sizeof(v[0])));
  };
  write_vec(hard_counts_);
  write_vec(logit_sums_);
  write_vec(compound_);
  write_vec(vote_count_);
  if (!out) throw IoError("write failed: " + path.string());
}

VoteTable VoteTable::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[8];
  uint64_t m = 0;
  uint32_t c = 0;
  uint8_t mode = 0, dedup = 0;
  double floor = 0.0;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kVotesMagic, 8) != 0)
    throw ParseError("not a vote table: " + path.string());
  in.read(reinterpret_cast<char*>(&m), 8);
  in.read(reinterpret_cast<char*>(&c), 4);
  in.read(reinterpret_cast<char*>(&mode), 1);
  in.read(reinterpret_cast<char*>(&dedup), 1);
  in.read(reinterpret_cast<char*>(&floor), 8);
  if (!in) throw ParseError("truncated vote table: " + path.string());

  VoteParams params;
  params.compound_mode =
      mode ? CompoundMode::raw_product : CompoundMode::log_softmax;
  params.dedup_per_view = dedup != 0;
  params.softmax_floor = floor;
  VoteTable table(m, static_cast<int>(c), params);
  auto read_vec = [&in, &path](auto& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(v[0])));
    if (!in) throw ParseError("truncated vote table: " + path.string());
  };
  read_vec(table.hard_counts_);
  read_vec(table.logit_sums_);
  read_vec(table.compound_);
  read_vec(table.vote_count_);
  return table;
}

void save_point_labels(const fs::path& path,
                       const std::vector<uint16_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size() * 2));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<uint16_t> load_point_labels(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  in.seekg(0, std::ios::end);
  auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % 2 != 0)
    throw ParseError("odd byte count in label file: " + path.string());
  std::vector<uint16_t> labels(bytes / 2);
  in.read(reinterpret_cast<char*>(labels.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("short read: " + path.string());
  return labels;
}

}  // namespace viewvote::vote
