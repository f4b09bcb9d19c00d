// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "pifdecode/decoder.hpp"
#include "pifdecode/fields.hpp"
#include "pifdecode/model.hpp"

namespace pifdecode {

enum class TrackingBaseline { tcaf, hungarian_euclidean, hungarian_oks };

std::string_view to_string(TrackingBaseline baseline);
/// Accepts both "hungarian-euclidean" and "hungarian_euclidean" spellings.
TrackingBaseline parse_tracking_baseline(std::string_view text);

struct SoftNmsConfig {
  double decay = 0.0;  // factor applied to a suppressed keypoint score
};

struct TrackingConfig {
  DecoderConfig decoder;
  SoftNmsConfig soft_nms;
  TrackingBaseline baseline = TrackingBaseline::tcaf;
  double match_threshold = 0.0;  // <= 0 selects 50 px (euclidean) or 0.3 OKS similarity
  int track_timeout = 2;         // frames a track survives without an update
};

double default_match_threshold(TrackingBaseline baseline);

struct TrackerState {
  std::vector<Track> tracks;  // active tracks, each holding its latest pose
  std::int64_t next_track_id = 1;
  std::optional<std::int64_t> previous_frame;
  std::shared_ptr<const HrMap> previous_hr;  // rescoring of frame t-1 during reverse matching
};

/// One frame of spatio-temporal tracking. `tcaf` links the previous frame to
/// this one and may be null on the first frame. Updates `state` in place.
/// Throws SequenceError when frames are skipped or repeated.
std::vector<TrackedPose> track_step(TrackerState& state, const FieldTensor& cif, const FieldTensor& caf,
                                    const FieldTensor* tcaf, const Skeleton& skeleton, const TrackingConfig& config);

/// Keypoint NMS that multiplies suppressed keypoint scores by `decay`
/// instead of dropping whole poses.
std::vector<TrackedPose> soft_nms(std::vector<TrackedPose> poses, const NmsConfig& nms, const SoftNmsConfig& soft,
                                  int max_poses);

/// Mean distance over keypoints detected in both poses; +inf without any.
double pose_distance_euclidean(const Pose& a, const Pose& b);
/// OKS of `a` against the detected keypoints of `b`; area <= 0 uses b's box area.
double pose_distance_oks(const Pose& a, const Pose& b, const Skeleton& skeleton, double area = 0.0);

enum class PoseDistance { euclidean, oks };

/// Assigns ids to `current` by minimum-cost matching against `previous`.
/// Pairs beyond the threshold stay unmatched and receive fresh ids.
std::vector<TrackedPose> hungarian_track(const std::vector<TrackedPose>& previous, const std::vector<Pose>& current,
                                         PoseDistance distance, double threshold, const Skeleton& skeleton,
                                         std::int64_t& next_track_id);

/// Sequence processor for every tracking mode; keeps the full track history.
class PoseTracker {
 public:
  PoseTracker(Skeleton skeleton, TrackingConfig config);

  std::vector<TrackedPose> step(const FieldTensor& cif, const FieldTensor& caf, const FieldTensor* tcaf);

  const TrackerState& state() const { return state_; }
  /// Every track seen so far, retired ones included, by id.
  const std::map<std::int64_t, Track>& history() const { return history_; }

 private:
  Skeleton skeleton_;
  TrackingConfig config_;
  TrackerState state_;
  std::map<std::int64_t, Track> history_;
};

}  // namespace pifdecode
