// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "builtin_skeleton_data.hpp"
#include "pifdecode/error.hpp"

namespace pifdecode {

using nlohmann::json;

int Skeleton::keypoint_index(std::string_view keypoint_name) const {
  auto it = std::find(keypoints.begin(), keypoints.end(), keypoint_name);
  if (it == keypoints.end()) {
    throw NotFoundError("skeleton " + name + " has no keypoint " + std::string(keypoint_name));
  }
  return static_cast<int>(it - keypoints.begin());
}

std::vector<std::string> builtin_skeleton_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::builtin_skeleton_data()) names.emplace_back(name);
  return names;
}

Skeleton builtin_skeleton(std::string_view name) {
  for (const auto& [builtin_name, text] : detail::builtin_skeleton_data()) {
    if (builtin_name == name) return parse_skeleton(text);
  }
  throw NotFoundError("unknown skeleton: " + std::string(name));
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<std::string> validate_skeleton(const Skeleton& skeleton) {
  std::vector<std::string> violations;
  const int n = skeleton.num_keypoints();
  auto add = [&](std::string msg) { violations.push_back(std::move(msg)); };

  if (n == 0) add("empty: skeleton has no keypoints");
  if (skeleton.sigmas.size() != skeleton.keypoints.size()) {
    add("sigmas: expected " + std::to_string(n) + " values, got " +
        std::to_string(skeleton.sigmas.size()));
  }
  for (size_t i = 0; i < skeleton.sigmas.size(); ++i) {
    if (!(skeleton.sigmas[i] > 0.0)) add("sigmas: value " + std::to_string(i) + " is not positive");
  }
  std::set<std::string> names;
  for (const auto& kp : skeleton.keypoints) {
    if (!names.insert(kp).second) add("duplicate keypoint name: " + kp);
  }

  std::set<std::pair<int, int>> seen;
  std::vector<int> parent(std::max(n, 0));
  std::iota(parent.begin(), parent.end(), 0);
  for (size_t e = 0; e < skeleton.edges.size(); ++e) {
    const auto& edge = skeleton.edges[e];
    const std::string where = "edge " + std::to_string(e) + " (" + std::to_string(edge.source) +
                              "," + std::to_string(edge.target) + ")";
    if (edge.source < 0 || edge.source >= n || edge.target < 0 || edge.target >= n) {
      add("index out of range: " + where);
      continue;
    }
    if (edge.source == edge.target) {
      add("self-loop: " + where);
      continue;
    }
    auto key = std::minmax(edge.source, edge.target);
    if (!seen.insert({key.first, key.second}).second) add("duplicate edge: " + where);
    if (!edge.dense) parent[find_root(parent, edge.source)] = find_root(parent, edge.target);
  }
  if (n > 0) {
    const int root = find_root(parent, 0);
    for (int k = 1; k < n; ++k) {
      if (find_root(parent, k) != root) {
        add("disconnected: keypoint " + std::to_string(k) + " (" + skeleton.keypoints[k] +
            ") is not reachable through non-dense edges");
      }
    }
  }

  std::set<int> temporal;
  for (int k : skeleton.temporal_edges) {
    if (k < 0 || k >= n) {
      add("index out of range: temporal edge " + std::to_string(k));
    } else if (!temporal.insert(k).second) {
      add("duplicate temporal edge: " + std::to_string(k));
    }
  }
  return violations;
}

Skeleton parse_skeleton(std::string_view json_text) {
  Skeleton s;
  try {
    const json doc = json::parse(json_text);
    s.name = doc.at("name").get<std::string>();
    s.keypoints = doc.at("keypoints").get<std::vector<std::string>>();
    s.sigmas = doc.at("sigmas").get<std::vector<double>>();
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw FormatError("skeleton edge must be [source, target] or [source, target, dense]");
      }
      s.edges.push_back({e[0].get<int>(), e[1].get<int>(), e.size() == 3 && e[2].get<bool>()});
    }
    if (doc.contains("temporal_edges")) {
      s.temporal_edges = doc.at("temporal_edges").get<std::vector<int>>();
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("invalid skeleton JSON: ") + ex.what());
  }
  return s;
}

std::string serialize_skeleton(const Skeleton& skeleton) {
  json doc;
  doc["name"] = skeleton.name;
  doc["keypoints"] = skeleton.keypoints;
  doc["sigmas"] = skeleton.sigmas;
  doc["edges"] = json::array();
  for (const auto& e : skeleton.edges) doc["edges"].push_back({e.source, e.target, e.dense});
  doc["temporal_edges"] = skeleton.temporal_edges;
  return doc.dump(1);
}

Skeleton load_skeleton_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open skeleton file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_skeleton(buffer.str());
}

Skeleton resolve_skeleton(const std::string& name_or_path) {
  for (const auto& name : builtin_skeleton_names()) {
    if (name == name_or_path) return builtin_skeleton(name);
  }
  if (std::filesystem::exists(name_or_path)) return load_skeleton_file(name_or_path);
  throw NotFoundError("unknown skeleton: " + name_or_path);
}

int Pose::num_detected() const {
  return static_cast<int>(
      std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.detected(); }));
}

std::optional<Box> Pose::bbox() const {
  std::optional<Box> box;
  for (const auto& k : keypoints) {
    if (!k.detected()) continue;
    if (!box) {
      box = Box{k.x, k.y, k.x, k.y};
    } else {
      box->x0 = std::min(box->x0, k.x);
      box->y0 = std::min(box->y0, k.y);
      box->x1 = std::max(box->x1, k.x);
      box->y1 = std::max(box->y1, k.y);
    }
  }
  return box;
}

int GroundTruthAnnotation::num_labeled() const {
  return static_cast<int>(std::count_if(keypoints.begin(), keypoints.end(),
                                        [](const AnnotatedKeypoint& k) { return k.labeled(); }));
}

std::optional<Box> GroundTruthAnnotation::bbox() const {
  std::optional<Box> box;
  for (const auto& k : keypoints) {
    if (!k.labeled()) continue;
    if (!box) {
      box = Box{k.x, k.y, k.x, k.y};
    } else {
      box->x0 = std::min(box->x0, k.x);
      box->y0 = std::min(box->y0, k.y);
      box->x1 = std::max(box->x1, k.x);
      box->y1 = std::max(box->y1, k.y);
    }
  }
  return box;
}

double GroundTruthAnnotation::area() const {
  const auto box = bbox();
  if (!box) return 1.0;
  return std::max(1.0, box->area());
}

}  // namespace pifdecode
