// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pifdecode/model.hpp"
#include "pifdecode/scene.hpp"

namespace pifdecode {

/// Object keypoint similarity of `pred` against the labeled keypoints of
/// `gt`, with per-keypoint constant k = 2 * sigma. Undetected predicted
/// keypoints contribute 0. Throws DomainError when `gt` has no labeled
/// keypoint or area <= 0.
double oks(const Pose& pred, const GroundTruthAnnotation& gt, const Skeleton& skeleton, double area);
/// Same, using gt.area() as the object area.
double oks(const Pose& pred, const GroundTruthAnnotation& gt, const Skeleton& skeleton);

/// The OKS thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> default_oks_thresholds();

struct ThresholdResult {
  double threshold = 0.0;
  double ap = 0.0;
  double recall = 0.0;              // final recall over all detections kept
  std::vector<double> precision;    // interpolated, at recall 0.00, 0.01, ..., 1.00
};

struct AreaRange {
  double min = 0.0;
  double max = 1e12;
};

struct ApReport {
  double ap = 0.0;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_medium;  // null when no ground truth falls in the range
  std::optional<double> ap_large;
  double ar = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_predictions = 0;
  std::vector<ThresholdResult> per_threshold;
};

inline constexpr int kMaxDetectionsPerImage = 20;

/// COCO-style keypoint AP. `predictions[i]` and `ground_truth[i]` describe
/// the same image. Only the top kMaxDetectionsPerImage poses per image count.
ApReport average_precision(std::span<const std::vector<Pose>> predictions,
                           std::span<const std::vector<GroundTruthAnnotation>> ground_truth, const Skeleton& skeleton,
                           std::span<const double> thresholds = {});

/// AP restricted to ground truth with area in `range`; the others and the
/// unmatched predictions outside the range are ignored. nullopt when no
/// ground truth falls in the range.
std::optional<ApReport> average_precision_in_range(std::span<const std::vector<Pose>> predictions,
                                                   std::span<const std::vector<GroundTruthAnnotation>> ground_truth,
                                                   const Skeleton& skeleton, AreaRange range,
                                                   std::span<const double> thresholds = {});

struct FrameMot {
  std::int64_t frame = 0;
  std::size_t gt = 0;
  std::size_t matches = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t idsw = 0;
};

struct MotReport {
  double mota = 0.0;
  double motp = 0.0;  // mean OKS of matched pairs, 0 without matches
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t idsw = 0;
  std::size_t num_gt = 0;
  std::size_t matches = 0;
  std::vector<FrameMot> per_frame;
};

/// CLEAR-MOT over aligned frames, matching poses to identities by OKS.
/// Correspondences from earlier frames are kept when still valid; the rest
/// are matched greedily by prediction score. MOTA divides by max(1, num_gt).
MotReport mota(std::span<const std::vector<TrackedPose>> tracked, std::span<const Scene> ground_truth,
               const Skeleton& skeleton, double match_threshold = 0.5);

/// Mean over instances of the fraction of their box covered by the union of
/// the other boxes. 0 for a single instance; throws DomainError for none.
double crowd_index(const Scene& scene);

struct CrowdIndexSplit {
  std::vector<std::size_t> easy;    // [0, 0.1]
  std::vector<std::size_t> medium;  // (0.1, 0.8]
  std::vector<std::size_t> hard;    // (0.8, 1]
};

/// Partitions scene indices by crowd index. Scenes without instances are easy.
CrowdIndexSplit split_by_crowd_index(std::span<const Scene> scenes);

}  // namespace pifdecode
