// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pifdecode/decoder.hpp"
#include "pifdecode/encoder.hpp"
#include "pifdecode/metrics.hpp"
#include "pifdecode/tracker.hpp"

namespace testing {

using namespace pifdecode;

struct Fields {
  FieldTensor cif;
  FieldTensor caf;
};

inline Fields perfect_fields(const Scene& scene, const Skeleton& skeleton, int stride = 8) {
  EncoderConfig config;
  config.stride = stride;
  return {encode_cif(scene, skeleton, config).field, encode_caf(scene, skeleton, config).field};
}

inline Scene generated_scene(std::uint64_t seed, const Skeleton& skeleton, SceneConfig config = {}) {
  return generate_scene(seed, config, skeleton).frames.front();
}

/// A pose whose keypoints are all visible at the given positions.
inline GroundTruthAnnotation annotation(std::int64_t id, const std::vector<std::pair<double, double>>& points,
                                        double size = 4.0) {
  GroundTruthAnnotation a;
  a.id = id;
  for (const auto& [x, y] : points) a.keypoints.push_back({x, y, Visibility::visible, size});
  return a;
}

/// Pose with every keypoint detected at the annotation's coordinates.
inline Pose pose_from(const GroundTruthAnnotation& a, double score = 1.0) {
  Pose p;
  for (const auto& kp : a.keypoints) {
    p.keypoints.push_back(kp.labeled() ? Keypoint{kp.x, kp.y, score, kp.size} : Keypoint{});
  }
  p.score = instance_score(p);
  return p;
}

/// Two-keypoint skeleton with a single edge.
inline Skeleton pair_skeleton() {
  Skeleton s;
  s.name = "pair";
  s.keypoints = {"a", "b"};
  s.sigmas = {0.05, 0.05};
  s.edges = {{0, 1, false}};
  s.temporal_edges = {0, 1};
  return s;
}

struct FrameFields {
  FieldTensor cif;
  FieldTensor caf;
  std::optional<FieldTensor> tcaf;  // links the previous frame to this one
};

/// Perfect CIF, CAF and TCAF targets for every frame of a sequence.
inline std::vector<FrameFields> sequence_fields(const SceneSet& set, const Skeleton& skeleton, int stride = 8) {
  EncoderConfig config;
  config.stride = stride;
  std::vector<FrameFields> out;
  for (std::size_t t = 0; t < set.frames.size(); ++t) {
    FrameFields f{encode_cif(set.frames[t], skeleton, config).field, encode_caf(set.frames[t], skeleton, config).field,
                  std::nullopt};
    if (t > 0) f.tcaf = encode_tcaf(set.frames[t - 1], set.frames[t], skeleton, config).field;
    out.push_back(std::move(f));
  }
  return out;
}

/// Runs a PoseTracker over every frame and returns the per-frame output.
inline std::vector<std::vector<TrackedPose>> run_tracker(const std::vector<FrameFields>& frames,
                                                         const Skeleton& skeleton, const TrackingConfig& config) {
  PoseTracker tracker(skeleton, config);
  std::vector<std::vector<TrackedPose>> out;
  for (const auto& f : frames) out.push_back(tracker.step(f.cif, f.caf, f.tcaf ? &*f.tcaf : nullptr));
  return out;
}

/// Mean keypoint distance between matched decoded poses and ground truth.
inline double mean_keypoint_error(const std::vector<Pose>& poses, const Scene& scene, const Skeleton& skeleton) {
  double sum = 0.0;
  int n = 0;
  for (const auto& gt : scene.annotations) {
    const Pose* best = nullptr;
    double best_oks = -1.0;
    for (const auto& p : poses) {
      const double o = oks(p, gt, skeleton);
      if (o > best_oks) {
        best_oks = o;
        best = &p;
      }
    }
    if (best == nullptr) return INFINITY;
    for (std::size_t k = 0; k < gt.keypoints.size(); ++k) {
      if (!gt.keypoints[k].labeled()) continue;
      const auto& kp = best->keypoints[k];
      if (!kp.detected()) return INFINITY;
      sum += std::hypot(kp.x - gt.keypoints[k].x, kp.y - gt.keypoints[k].y);
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

}  // namespace testing
