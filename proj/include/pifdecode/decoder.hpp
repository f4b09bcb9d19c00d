// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pifdecode/fields.hpp"
#include "pifdecode/model.hpp"

namespace pifdecode {

enum class SeedRescoring { hr, local_3x3_nms, none };

std::string_view to_string(SeedRescoring mode);
SeedRescoring parse_seed_rescoring(std::string_view text);

struct NmsConfig {
  double r_min = 4.0;  // px
  double alpha = 1.0;  // suppression radius in units of keypoint size
  int min_keypoints = 1;
  double instance_threshold = 0.2;
};

struct DecoderConfig {
  double seed_threshold = 0.2;
  double keypoint_threshold = 0.15;  // minimum association score to connect a keypoint
  double caf_threshold = 0.1;        // CAF cells at or below this confidence are ignored
  double hr_threshold = 0.1;         // CIF cells at or below this confidence skip accumulation
  double hr_saturation = 1.0;        // accumulated mass mapped to confidence 1
  bool use_frontier = true;
  bool use_dense_edges = false;
  SeedRescoring seed_rescoring = SeedRescoring::hr;
  bool caf_rescoring = true;
  bool blend_top2 = true;
  bool reverse_match = true;
  bool force_complete = false;
  int max_poses = 20;
  NmsConfig nms;
};

/// Throws DomainError for out-of-range values.
void validate_decoder_config(const DecoderConfig& config);

struct Seed {
  int keypoint = 0;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  double size = 0.0;
};

/// HR confidence clamped to [0, 1]: min(1, f / saturation).
double hr_confidence(const HrMap& hr, int keypoint, double x, double y, double saturation);

/// Seeds sorted by score descending, then keypoint index, then cell raster
/// index. With hr rescoring a seed scores c * hr_confidence at its regressed
/// location, so isolated activations without accumulated support fade.
/// `hr` is required when seed_rescoring is hr and ignored otherwise.
std::vector<Seed> extract_seeds(const FieldTensor& cif, const HrMap* hr, const DecoderConfig& config);

/// One CAF cell read in a chosen direction: endpoint 1 is the source side.
struct Association {
  double c = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;

  Association reversed() const { return {c, x2, y2, x1, y1, sigma2, sigma1}; }
};

/// c * exp(-|source - (x1, y1)| / sigma1) * f, where f is the clamped HR
/// confidence of the target keypoint at (x2, y2), or 1 without rescoring.
double caf_association_score(const Association& assoc, double source_x, double source_y, const HrMap* hr_target,
                             int target_keypoint, bool caf_rescoring, double hr_saturation = 1.0);

/// Compact per-field list of CAF cells above a confidence threshold, with a
/// bucket grid over each endpoint for nearest-first searches.
class AssociationIndex {
 public:
  AssociationIndex() = default;
  AssociationIndex(const FieldTensor& caf, double threshold);

  int fields() const { return static_cast<int>(fields_.size()); }
  int stride() const { return stride_; }
  std::span<const Association> field(int f) const { return fields_[static_cast<std::size_t>(f)].cells; }

  /// Calls visit(cell) for the cells of field `f` in rings of buckets around
  /// (x, y) on endpoint 1 (forward) or endpoint 2. Before each ring,
  /// bound(r) receives an upper bound of c * exp(-d / sigma) over all
  /// remaining cells; returning false stops the search.
  template <class Bound, class Visit>
  void search(int f, bool forward, double x, double y, Bound&& bound, Visit&& visit) const;

 private:
  struct Side {
    std::vector<std::uint32_t> order;   // cell indices grouped by bucket
    std::vector<std::uint32_t> offsets;  // bucket -> range in order
    double sigma_max = 0.0;
  };
  struct Field {
    std::vector<Association> cells;
    std::array<Side, 2> sides;
    double c_max = 0.0;
  };

  int stride_ = 1;
  double bucket_ = 16.0;
  int grid_w_ = 0;
  int grid_h_ = 0;
  std::vector<Field> fields_;
};

template <class Bound, class Visit>
void AssociationIndex::search(int f, bool forward, double x, double y, Bound&& bound, Visit&& visit) const {
  const Field& field = fields_[static_cast<std::size_t>(f)];
  if (field.cells.empty()) return;
  const Side& side = field.sides[forward ? 0 : 1];
  const int bx = std::clamp(static_cast<int>(std::floor(x / bucket_)), 0, grid_w_ - 1);
  const int by = std::clamp(static_cast<int>(std::floor(y / bucket_)), 0, grid_h_ - 1);
  const int max_ring = std::max({bx, grid_w_ - 1 - bx, by, grid_h_ - 1 - by});
  for (int ring = 0; ring <= max_ring; ++ring) {
    const double gap = std::max(0, ring - 1) * bucket_;
    const double limit = side.sigma_max > 0.0 ? field.c_max * std::exp(-gap / side.sigma_max) : 0.0;
    if (!bound(limit)) return;
    for (int gy = std::max(0, by - ring); gy <= std::min(grid_h_ - 1, by + ring); ++gy) {
      const bool edge_row = gy == by - ring || gy == by + ring;
      const int step = edge_row ? 1 : 2 * ring;
      for (int gx = bx - ring; gx <= bx + ring; gx += std::max(1, step)) {
        if (gx < 0 || gx >= grid_w_) continue;
        const std::size_t b = static_cast<std::size_t>(gy) * grid_w_ + gx;
        for (std::uint32_t i = side.offsets[b]; i < side.offsets[b + 1]; ++i) visit(field.cells[side.order[i]]);
      }
    }
  }
}

struct Connection {
  double x = 0.0;
  double y = 0.0;
  double size = 0.0;
  double score = 0.0;
};

/// Everything needed to follow one edge in one direction.
struct EdgeQuery {
  const AssociationIndex* index = nullptr;
  int field = 0;
  bool forward = true;             // source sits at endpoint 1 of the field
  const HrMap* target_hr = nullptr;
  int target_keypoint = 0;
  const HrMap* source_hr = nullptr;  // rescoring during reverse matching
  int source_keypoint = 0;
};

/// Best (optionally blended) association from `source`, or nullopt when no
/// cell scores above zero or reverse matching fails.
std::optional<Connection> find_connection(const Keypoint& source, const EdgeQuery& query,
                                          const DecoderConfig& config);

/// Convenience form following skeleton edge `edge` from the keypoint of
/// `partial` at its source (forward) or target (backward) end.
std::optional<Connection> find_connection(const Pose& partial, const Skeleton& skeleton, int edge, bool forward,
                                          const AssociationIndex& caf, const HrMap* hr, const DecoderConfig& config);

/// Claimed discs per keypoint type, bucketed in a grid of 4 px cells.
class Occupancy {
 public:
  explicit Occupancy(double cell = 4.0) : cell_(cell) {}

  void claim(int keypoint, double x, double y, double radius);
  bool occupied(int keypoint, double x, double y) const;

 private:
  struct Disc {
    double x, y, r2;
  };
  std::uint64_t key(int keypoint, std::int64_t cx, std::int64_t cy) const;

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<Disc>> buckets_;
};

/// Suppression radius of a keypoint.
inline double nms_radius(const Keypoint& kp, const NmsConfig& nms) { return std::max(nms.r_min, nms.alpha * kp.size); }

/// Grows `pose` (at least one detected keypoint) over the skeleton edges.
Pose grow_pose(Pose pose, const Skeleton& skeleton, const AssociationIndex& caf, const HrMap* hr,
               const DecoderConfig& config);

/// Weighted mean of `scores` with the three highest counted three times;
/// 0 for an empty span. Every entry counts as a detected keypoint.
double instance_score(std::span<const double> scores);
/// instance_score over the detected keypoints of `pose`.
double instance_score(const Pose& pose);

std::vector<Pose> keypoint_nms(std::vector<Pose> poses, const NmsConfig& nms, int max_poses);

struct DecodeProfile {
  double accumulate_ms = 0.0;
  double seeds_ms = 0.0;
  double growth_ms = 0.0;
  double nms_ms = 0.0;
  std::size_t seeds = 0;
};

/// Full single-frame pipeline. Throws ShapeError when the tensors do not fit
/// the skeleton or each other.
std::vector<Pose> decode_frame(const FieldTensor& cif, const FieldTensor& caf, const Skeleton& skeleton,
                               const DecoderConfig& config = {}, DecodeProfile* profile = nullptr);

}  // namespace pifdecode
