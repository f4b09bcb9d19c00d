// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <optional>

#include <json.hpp>

#include "pifdecode/encoder.hpp"
#include "pifdecode/error.hpp"
#include "random.hpp"

namespace pifdecode {

namespace {

struct Vec {
  double x = 0.0;
  double y = 0.0;
};

// Upright person facing the camera, unit height, person's left at +x.
const std::map<std::string, Vec, std::less<>>& person_template() {
  static const std::map<std::string, Vec, std::less<>> kTemplate = {
      {"nose", {0.00, 0.08}},           {"left_eye", {0.025, 0.06}},      {"right_eye", {-0.025, 0.06}},
      {"left_ear", {0.06, 0.075}},      {"right_ear", {-0.06, 0.075}},    {"left_shoulder", {0.12, 0.20}},
      {"right_shoulder", {-0.12, 0.20}}, {"left_elbow", {0.16, 0.36}},    {"right_elbow", {-0.16, 0.36}},
      {"left_wrist", {0.18, 0.50}},     {"right_wrist", {-0.18, 0.50}},   {"left_hip", {0.08, 0.52}},
      {"right_hip", {-0.08, 0.52}},     {"left_knee", {0.09, 0.74}},      {"right_knee", {-0.09, 0.74}},
      {"left_ankle", {0.09, 0.96}},     {"right_ankle", {-0.09, 0.96}},
  };
  return kTemplate;
}

bool is_limb(const std::string& name) {
  for (const char* part : {"elbow", "wrist", "knee", "ankle", "paw"}) {
    if (name.find(part) != std::string::npos) return true;
  }
  return false;
}

std::vector<std::vector<int>> sparse_adjacency(const Skeleton& skeleton) {
  std::vector<std::vector<int>> adj(skeleton.num_keypoints());
  for (const auto& e : skeleton.edges) {
    if (e.dense) continue;
    adj[e.source].push_back(e.target);
    adj[e.target].push_back(e.source);
  }
  return adj;
}

/// Breadth-first order over the sparse edges with the parent of every keypoint.
std::vector<std::pair<int, int>> tree_order(const Skeleton& skeleton) {
  const auto adj = sparse_adjacency(skeleton);
  std::vector<std::pair<int, int>> order;
  std::vector<bool> seen(skeleton.num_keypoints(), false);
  std::deque<int> queue{0};
  seen[0] = true;
  order.emplace_back(0, -1);
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (int n : adj[k]) {
      if (seen[n]) continue;
      seen[n] = true;
      order.emplace_back(n, k);
      queue.push_back(n);
    }
  }
  if (static_cast<int>(order.size()) != skeleton.num_keypoints()) {
    throw GenerationFailedError("skeleton " + skeleton.name + " is not connected");
  }
  return order;
}

std::vector<Vec> base_template(const Skeleton& skeleton, detail::Rng& rng) {
  std::vector<Vec> out(skeleton.num_keypoints());
  const auto& person = person_template();
  bool all_known = true;
  for (int k = 0; k < skeleton.num_keypoints(); ++k) {
    auto it = person.find(skeleton.keypoints[k]);
    if (it == person.end()) {
      all_known = false;
      break;
    }
    out[k] = it->second;
  }
  if (all_known) return out;
  // Random tree layout for skeletons without a template.
  for (const auto& [k, parent] : tree_order(skeleton)) {
    if (parent < 0) continue;
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double length = rng.uniform(0.15, 0.3);
    out[k] = {out[parent].x + length * std::cos(angle), out[parent].y + length * std::sin(angle)};
  }
  return out;
}

/// Articulated shape normalized to unit height with its box at the origin.
/// Returns positions and the box width.
std::pair<std::vector<Vec>, double> sample_shape(const Skeleton& skeleton, const std::vector<Vec>& base,
                                                 double articulation_deg, detail::Rng& rng) {
  std::vector<Vec> pos(skeleton.num_keypoints());
  const double max_angle = articulation_deg * std::numbers::pi / 180.0;
  for (const auto& [k, parent] : tree_order(skeleton)) {
    if (parent < 0) {
      pos[k] = base[k];
      continue;
    }
    const double factor = is_limb(skeleton.keypoints[k]) ? 1.0 : 0.25;
    const double angle = rng.uniform(-max_angle, max_angle) * factor;
    const double scale = rng.uniform(0.9, 1.1);
    const double dx = base[k].x - base[parent].x;
    const double dy = base[k].y - base[parent].y;
    pos[k] = {pos[parent].x + scale * (dx * std::cos(angle) - dy * std::sin(angle)),
              pos[parent].y + scale * (dx * std::sin(angle) + dy * std::cos(angle))};
  }
  double x0 = pos[0].x, x1 = pos[0].x, y0 = pos[0].y, y1 = pos[0].y;
  for (const auto& p : pos) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double h = std::max(y1 - y0, 1e-6);
  for (auto& p : pos) p = {(p.x - x0) / h, (p.y - y0) / h};
  return {pos, (x1 - x0) / h};
}

struct Identity {
  std::vector<Vec> shape;  // pixels, box at origin
  double width = 0.0;
  double height = 0.0;
  std::vector<Vec> offsets;  // top-left per frame
  std::vector<double> sizes;
};

Box padded_box(const Identity& id, int frame, double margin) {
  const Vec o = id.offsets[frame];
  return {o.x - margin, o.y - margin, o.x + id.width + margin, o.y + id.height + margin};
}

bool boxes_overlap(const Box& a, const Box& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

bool inside(const Identity& id, const ImageSize& image) {
  for (const auto& o : id.offsets) {
    if (o.x < 0.0 || o.y < 0.0) return false;
    if (o.x + id.width > image.width - 1 || o.y + id.height > image.height - 1) return false;
  }
  return true;
}

Identity make_identity(const Skeleton& skeleton, const std::vector<Vec>& unit_shape, double unit_width,
                       double height) {
  Identity id;
  id.height = height;
  id.width = unit_width * height;
  for (const auto& p : unit_shape) id.shape.push_back({p.x * height, p.y * height});
  const double diag = std::hypot(id.width, id.height);
  for (double s : skeleton.sigmas) id.sizes.push_back(std::max(1.0, diag * s));
  return id;
}

void check_config(const SceneConfig& c) {
  if (c.image_size.width <= 0 || c.image_size.height <= 0) throw GenerationFailedError("image size must be positive");
  if (c.frames < 1) throw GenerationFailedError("frames must be >= 1");
  if (c.min_poses < 0 || c.max_poses < c.min_poses) throw GenerationFailedError("invalid pose count range");
  if (!(c.min_height > 0.0) || c.max_height < c.min_height) throw GenerationFailedError("invalid height range");
  if (c.hidden_fraction < 0.0 || c.absent_fraction < 0.0 || c.hidden_fraction + c.absent_fraction > 1.0) {
    throw GenerationFailedError("occlusion fractions must be non-negative and sum to at most 1");
  }
  if (c.min_speed < 0.0 || c.max_speed < c.min_speed) throw GenerationFailedError("invalid speed range");
}

std::optional<std::vector<Identity>> layout_free(const Skeleton& skeleton, const SceneConfig& c,
                                                 const std::vector<Vec>& camera, detail::Rng& rng) {
  const auto base = base_template(skeleton, rng);
  const int n = static_cast<int>(rng.integer(c.min_poses, c.max_poses));
  std::vector<Identity> placed;
  for (int i = 0; i < n; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < c.max_attempts && !ok; ++attempt) {
      auto [unit, unit_width] = sample_shape(skeleton, base, c.articulation_deg, rng);
      Identity id = make_identity(skeleton, unit, unit_width, rng.uniform(c.min_height, c.max_height));
      const double max_x = c.image_size.width - 1 - id.width;
      const double max_y = c.image_size.height - 1 - id.height;
      if (max_x < 0.0 || max_y < 0.0) continue;
      const double speed = rng.uniform(c.min_speed, c.max_speed);
      const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec start{rng.uniform(0.0, max_x), rng.uniform(0.0, max_y)};
      for (int t = 0; t < c.frames; ++t) {
        id.offsets.push_back({start.x + speed * std::cos(heading) * t + camera[t].x,
                              start.y + speed * std::sin(heading) * t + camera[t].y});
      }
      if (!inside(id, c.image_size)) continue;
      ok = true;
      if (!c.allow_overlap) {
        for (const auto& other : placed) {
          for (int t = 0; t < c.frames && ok; ++t) {
            if (boxes_overlap(padded_box(id, t, c.margin), padded_box(other, t, c.margin))) ok = false;
          }
          if (!ok) break;
        }
      }
      if (ok) placed.push_back(std::move(id));
    }
    if (!ok) return std::nullopt;
  }
  return placed;
}

std::optional<std::vector<Identity>> layout_crossing(const Skeleton& skeleton, const SceneConfig& c,
                                                     const std::vector<Vec>& camera, detail::Rng& rng) {
  const auto base = base_template(skeleton, rng);
  for (int attempt = 0; attempt < c.max_attempts; ++attempt) {
    auto [unit, unit_width] = sample_shape(skeleton, base, c.articulation_deg, rng);
    const double height = rng.uniform(c.min_height, c.max_height);
    Identity a = make_identity(skeleton, unit, unit_width, height);
    Identity b = a;
    const double dy = rng.uniform(0.25, 0.45) * height;
    const double speed = c.max_speed > 0.0 ? rng.uniform(c.min_speed, c.max_speed) : rng.uniform(1.1, 1.6) * dy;
    const double t_cross = (c.frames - 1) / 2.0 + rng.uniform(-0.5, 0.5);
    const double xc = c.image_size.width / 2.0 + rng.uniform(-0.1, 0.1) * c.image_size.width;
    const double yc = c.image_size.height / 2.0 + rng.uniform(-0.2, 0.2) * c.image_size.height;
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (int t = 0; t < c.frames; ++t) {
      const double dx = speed * (t - t_cross);
      a.offsets.push_back({xc - a.width / 2 + dx + camera[t].x, yc - sign * dy / 2 - height / 2 + camera[t].y});
      b.offsets.push_back({xc - b.width / 2 - dx + camera[t].x, yc + sign * dy / 2 - height / 2 + camera[t].y});
    }
    if (inside(a, c.image_size) && inside(b, c.image_size)) return std::vector<Identity>{a, b};
  }
  return std::nullopt;
}

}  // namespace

std::string scene_config_to_json(const SceneConfig& c) {
  nlohmann::json j;
  j["image_size"] = {c.image_size.width, c.image_size.height};
  j["min_poses"] = c.min_poses;
  j["max_poses"] = c.max_poses;
  j["min_height"] = c.min_height;
  j["max_height"] = c.max_height;
  j["allow_overlap"] = c.allow_overlap;
  j["margin"] = c.margin;
  j["hidden_fraction"] = c.hidden_fraction;
  j["absent_fraction"] = c.absent_fraction;
  j["articulation_deg"] = c.articulation_deg;
  j["frames"] = c.frames;
  j["min_speed"] = c.min_speed;
  j["max_speed"] = c.max_speed;
  j["crossing"] = c.crossing;
  j["camera_shift"] = c.camera_shift;
  j["max_attempts"] = c.max_attempts;
  return j.dump();
}

SceneSet generate_scene(std::uint64_t seed, const SceneConfig& config, const Skeleton& skeleton) {
  check_config(config);
  if (!validate_skeleton(skeleton).empty()) throw GenerationFailedError("invalid skeleton " + skeleton.name);
  detail::Rng rng(seed);

  std::vector<Vec> camera(config.frames);
  for (int t = 1; t < config.frames; ++t) {
    camera[t] = {rng.uniform(-config.camera_shift, config.camera_shift),
                 rng.uniform(-config.camera_shift, config.camera_shift)};
  }

  std::optional<std::vector<Identity>> identities;
  for (int restart = 0; restart < 20 && !identities; ++restart) {
    identities = config.crossing ? layout_crossing(skeleton, config, camera, rng)
                                 : layout_free(skeleton, config, camera, rng);
  }
  if (!identities) {
    throw GenerationFailedError("could not place poses within " + std::to_string(config.max_attempts) +
                                " attempts; image too small for the requested poses");
  }

  nlohmann::json provenance = nlohmann::json::parse(scene_config_to_json(config));
  provenance["seed"] = seed;
  provenance["skeleton"] = skeleton.name;

  SceneSet out;
  out.image_size = config.image_size;
  out.sequence = config.frames > 1;
  out.config_json = provenance.dump();
  for (int t = 0; t < config.frames; ++t) {
    Scene scene;
    scene.image_size = config.image_size;
    scene.frame = t;
    for (std::size_t i = 0; i < identities->size(); ++i) {
      const Identity& id = (*identities)[i];
      GroundTruthAnnotation ann;
      ann.id = static_cast<std::int64_t>(i) + 1;
      for (int k = 0; k < skeleton.num_keypoints(); ++k) {
        const double r = rng.uniform();
        Visibility v = Visibility::visible;
        if (r < config.absent_fraction) {
          v = Visibility::absent;
        } else if (r < config.absent_fraction + config.hidden_fraction) {
          v = Visibility::hidden;
        }
        ann.keypoints.push_back(
            {id.offsets[t].x + id.shape[k].x, id.offsets[t].y + id.shape[k].y, v, id.sizes[k]});
      }
      if (ann.num_labeled() == 0) ann.keypoints[0].visibility = Visibility::visible;
      scene.annotations.push_back(std::move(ann));
    }
    out.frames.push_back(std::move(scene));
  }
  return out;
}

}  // namespace pifdecode
