// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pifdecode {

struct ImageSize {
  int width = 0;
  int height = 0;

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < width && y < height;
  }
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Axis-aligned box in image pixels, [x0, x1] x [y0, y1].
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Edge {
  int source = 0;
  int target = 0;
  bool dense = false;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Keypoint vocabulary plus spatial and temporal association structure.
///
/// Skeletons are plain data. The builtin ones are loaded from the JSON files
/// under data/skeletons, which are compiled into the library.
struct Skeleton {
  std::string name;
  std::vector<std::string> keypoints;
  std::vector<double> sigmas;
  std::vector<Edge> edges;
  std::vector<int> temporal_edges;

  int num_keypoints() const { return static_cast<int>(keypoints.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_temporal_edges() const { return static_cast<int>(temporal_edges.size()); }
  int keypoint_index(std::string_view keypoint_name) const;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

/// Names accepted by builtin_skeleton().
std::vector<std::string> builtin_skeleton_names();

/// Throws NotFoundError for unknown names.
Skeleton builtin_skeleton(std::string_view name);

/// Every violated invariant as a human readable message; empty when valid.
std::vector<std::string> validate_skeleton(const Skeleton& skeleton);

Skeleton parse_skeleton(std::string_view json_text);
std::string serialize_skeleton(const Skeleton& skeleton);
Skeleton load_skeleton_file(const std::string& path);

/// Builtin name or path to a skeleton JSON file.
Skeleton resolve_skeleton(const std::string& name_or_path);

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;  // 0 means undetected
  double size = 0.0;

  bool detected() const { return score > 0.0; }
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct Pose {
  std::vector<Keypoint> keypoints;
  double score = 0.0;

  int num_detected() const;
  /// Box over detected keypoints; nullopt when nothing is detected.
  std::optional<Box> bbox() const;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct TrackedPose {
  std::int64_t track_id = 0;
  Pose pose;
  friend bool operator==(const TrackedPose&, const TrackedPose&) = default;
};

enum class Visibility : int { absent = 0, hidden = 1, visible = 2 };

struct AnnotatedKeypoint {
  double x = 0.0;
  double y = 0.0;
  Visibility visibility = Visibility::absent;
  double size = 0.0;

  bool labeled() const { return visibility != Visibility::absent; }
  friend bool operator==(const AnnotatedKeypoint&, const AnnotatedKeypoint&) = default;
};

struct GroundTruthAnnotation {
  std::int64_t id = 0;  // identity label, unique per scene
  std::vector<AnnotatedKeypoint> keypoints;
  std::vector<Box> crowd_regions;

  int num_labeled() const;
  std::optional<Box> bbox() const;
  /// Area used for OKS: bbox area of the labeled keypoints, at least 1 px^2.
  double area() const;
  friend bool operator==(const GroundTruthAnnotation&, const GroundTruthAnnotation&) = default;
};

struct Track {
  std::int64_t id = 0;
  std::map<std::int64_t, Pose> poses;
  std::int64_t last_active_frame = 0;

  const Pose& last_pose() const { return poses.rbegin()->second; }
};

}  // namespace pifdecode
