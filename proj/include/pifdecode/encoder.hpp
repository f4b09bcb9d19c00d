// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pifdecode/fields.hpp"
#include "pifdecode/scene.hpp"

namespace pifdecode {

/// Confidence, localization and scale masks, one 0/1 plane per field.
class LossMasks {
 public:
  LossMasks() = default;
  explicit LossMasks(FieldTensor planes);

  bool confidence(int field, int y, int x) const { return planes_.at(mask_channel::confidence, field, y, x) != 0.0f; }
  bool localization(int field, int y, int x) const { return planes_.at(mask_channel::localization, field, y, x) != 0.0f; }
  bool scale(int field, int y, int x) const { return planes_.at(mask_channel::scale, field, y, x) != 0.0f; }

  int fields() const { return planes_.fields(); }
  int height() const { return planes_.height(); }
  int width() const { return planes_.width(); }
  std::size_t count_localization() const;

  const FieldTensor& tensor() const { return planes_; }
  FieldTensor& tensor() { return planes_; }

 private:
  FieldTensor planes_;
};

struct EncodedField {
  FieldTensor field;
  LossMasks masks;
};

struct EncoderConfig {
  int stride = 8;
  int window = 4;         // CIF target window side in cells
  double spread = 1.0;    // value written to the b channels of active cells
};

/// Sets a hidden keypoint to absent when a visible keypoint of the same type
/// lies closer than radius_factor * size(visible). Visible keypoints are never touched.
std::vector<GroundTruthAnnotation> suppress_self_hidden(const std::vector<GroundTruthAnnotation>& annotations,
                                                        double radius_factor = 1.0);

/// Throws EncodeOutOfBoundsError when a labeled keypoint lies outside the image.
EncodedField encode_cif(const Scene& scene, const Skeleton& skeleton, const EncoderConfig& config = {});
EncodedField encode_caf(const Scene& scene, const Skeleton& skeleton, const EncoderConfig& config = {});
/// Temporal association targets from `previous` (endpoint 1) to `current` (endpoint 2).
EncodedField encode_tcaf(const Scene& previous, const Scene& current, const Skeleton& skeleton,
                         const EncoderConfig& config = {});

/// Zeroes the confidence of `edge` in every cell whose regression targets point
/// at the two keypoints of `annotation`. Simulates missing association evidence.
void zero_edge_for_annotation(FieldTensor& caf, const Skeleton& skeleton, int edge,
                              const GroundTruthAnnotation& annotation);

struct NoiseConfig {
  double confidence_sigma = 0.1;
  std::uint64_t seed = 0;
};

/// Adds zero-mean Gaussian noise to the confidence channel (clamped to [0,1]).
/// Cells without a target get regressions pointing at their own center and a
/// size of one stride, so spurious activations look like an uninformed network.
void add_confidence_noise(FieldTensor& field, const NoiseConfig& config);

struct SceneConfig {
  ImageSize image_size{801, 801};
  int min_poses = 1;
  int max_poses = 10;
  double min_height = 60.0;   // px
  double max_height = 160.0;  // px
  bool allow_overlap = false;
  double margin = 16.0;       // padding around each pose box when overlap is disallowed, px
  double hidden_fraction = 0.0;
  double absent_fraction = 0.0;
  double articulation_deg = 20.0;
  int frames = 1;
  double min_speed = 0.0;     // px / frame
  double max_speed = 0.0;     // px / frame
  bool crossing = false;      // two identical-looking identities crossing paths
  double camera_shift = 0.0;  // max per-frame global jitter, px
  int max_attempts = 400;
};

std::string scene_config_to_json(const SceneConfig& config);

/// Deterministic for a given seed. Produces one independent image when
/// config.frames == 1, otherwise a sequence with persistent identities.
/// Throws GenerationFailedError when the configuration cannot be satisfied.
SceneSet generate_scene(std::uint64_t seed, const SceneConfig& config, const Skeleton& skeleton);

}  // namespace pifdecode
