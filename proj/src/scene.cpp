// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/scene.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pifdecode/error.hpp"

namespace pifdecode {

using nlohmann::json;

const GroundTruthAnnotation* Scene::find(std::int64_t id) const {
  for (const auto& a : annotations) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

std::string serialize_scenes(const SceneSet& scenes) {
  json doc;
  doc["format"] = kSceneFormat;
  doc["version"] = kSceneFormatVersion;
  doc["image_size"] = {scenes.image_size.width, scenes.image_size.height};
  doc["sequence"] = scenes.sequence;
  doc["config"] = scenes.config_json.empty() ? json::object() : json::parse(scenes.config_json);
  doc["frames"] = json::array();
  for (const auto& scene : scenes.frames) {
    json frame;
    frame["frame"] = scene.frame;
    frame["annotations"] = json::array();
    for (const auto& ann : scene.annotations) {
      json a;
      a["id"] = ann.id;
      a["keypoints"] = json::array();
      for (const auto& kp : ann.keypoints) {
        a["keypoints"].push_back({kp.x, kp.y, static_cast<int>(kp.visibility), kp.size});
      }
      if (!ann.crowd_regions.empty()) {
        a["crowd_regions"] = json::array();
        for (const auto& b : ann.crowd_regions) a["crowd_regions"].push_back({b.x0, b.y0, b.x1, b.y1});
      }
      frame["annotations"].push_back(std::move(a));
    }
    doc["frames"].push_back(std::move(frame));
  }
  return doc.dump();
}

SceneSet parse_scenes(std::string_view json_text) {
  SceneSet scenes;
  try {
    const json doc = json::parse(json_text);
    if (doc.contains("format") && doc.at("format").get<std::string>() != kSceneFormat) {
      throw FormatError("not a scene document: format " + doc.at("format").dump());
    }
    scenes.image_size = {doc.at("image_size").at(0).get<int>(), doc.at("image_size").at(1).get<int>()};
    scenes.sequence = doc.value("sequence", false);
    if (doc.contains("config")) scenes.config_json = doc.at("config").dump();
    std::int64_t next_frame = 0;
    for (const auto& f : doc.at("frames")) {
      Scene scene;
      scene.image_size = scenes.image_size;
      scene.frame = f.value("frame", next_frame);
      next_frame = scene.frame + 1;
      for (const auto& a : f.at("annotations")) {
        GroundTruthAnnotation ann;
        ann.id = a.value("id", static_cast<std::int64_t>(scene.annotations.size() + 1));
        for (const auto& kp : a.at("keypoints")) {
          const int v = kp.at(2).get<int>();
          if (v < 0 || v > 2) throw FormatError("keypoint visibility must be 0, 1 or 2");
          ann.keypoints.push_back({kp.at(0).get<double>(), kp.at(1).get<double>(), static_cast<Visibility>(v),
                                   kp.size() > 3 ? kp.at(3).get<double>() : 0.0});
        }
        if (a.contains("crowd_regions")) {
          for (const auto& b : a.at("crowd_regions")) {
            ann.crowd_regions.push_back(
                {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()});
          }
        }
        if (scene.find(ann.id) != nullptr) {
          throw FormatError("duplicate identity " + std::to_string(ann.id) + " in frame " +
                            std::to_string(scene.frame));
        }
        scene.annotations.push_back(std::move(ann));
      }
      scenes.frames.push_back(std::move(scene));
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("invalid scene JSON: ") + ex.what());
  }
  return scenes;
}

void write_scenes(const std::string& path, const SceneSet& scenes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << serialize_scenes(scenes) << '\n';
}

SceneSet read_scenes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open scene file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenes(buffer.str());
}

}  // namespace pifdecode
