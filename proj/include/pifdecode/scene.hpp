// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pifdecode/model.hpp"

namespace pifdecode {

/// Ground truth of one image or one frame of a sequence.
struct Scene {
  ImageSize image_size;
  std::int64_t frame = 0;
  std::vector<GroundTruthAnnotation> annotations;

  const GroundTruthAnnotation* find(std::int64_t id) const;
};

/// A list of frames sharing one image size. When `sequence` is set the frames
/// are consecutive and annotation ids are identities across frames; otherwise
/// every frame is an independent image.
struct SceneSet {
  ImageSize image_size;
  bool sequence = false;
  std::vector<Scene> frames;
  std::string config_json;  // generator configuration, empty when unknown
};

inline constexpr std::string_view kSceneFormat = "pifdecode.scenes";
inline constexpr int kSceneFormatVersion = 1;

/// JSON: {format, version, image_size:[w,h], sequence, config,
///        frames:[{frame, annotations:[{id, keypoints:[[x,y,v,size]], crowd_regions:[[x0,y0,x1,y1]]}]}]}
/// with v in {0 absent, 1 hidden, 2 visible}.
std::string serialize_scenes(const SceneSet& scenes);
SceneSet parse_scenes(std::string_view json_text);
void write_scenes(const std::string& path, const SceneSet& scenes);
SceneSet read_scenes(const std::string& path);

}  // namespace pifdecode
