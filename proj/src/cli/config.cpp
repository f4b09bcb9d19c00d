// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <functional>
#include <set>
#include <string>

#include <json.hpp>

#include "pifdecode/cli.hpp"
#include "pifdecode/error.hpp"

namespace pifdecode::cli {

using nlohmann::json;

namespace {

/// Reads the known keys of one config section and rejects the rest.
class SectionReader {
 public:
  SectionReader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw FormatError("config section '" + section_ + "' must be an object");
  }

  template <class T>
  SectionReader& field(const char* key, T& target) {
    return custom(key, [&](const json& v) { target = v.get<T>(); });
  }

  SectionReader& custom(const char* key, const std::function<void(const json&)>& read) {
    known_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      read(j_.at(key));
    } catch (const json::exception& e) {
      throw FormatError("config key '" + section_ + "." + key + "': " + e.what());
    }
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.contains(key)) throw FormatError("unknown config key '" + section_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> known_;
};

json decoder_json(const DecoderConfig& d) {
  return {{"seed_threshold", d.seed_threshold},
          {"keypoint_threshold", d.keypoint_threshold},
          {"caf_threshold", d.caf_threshold},
          {"hr_threshold", d.hr_threshold},
          {"hr_saturation", d.hr_saturation},
          {"use_frontier", d.use_frontier},
          {"use_dense_edges", d.use_dense_edges},
          {"seed_rescoring", std::string(to_string(d.seed_rescoring))},
          {"caf_rescoring", d.caf_rescoring},
          {"blend_top2", d.blend_top2},
          {"reverse_match", d.reverse_match},
          {"force_complete", d.force_complete},
          {"max_poses", d.max_poses},
          {"nms",
           {{"r_min", d.nms.r_min},
            {"alpha", d.nms.alpha},
            {"min_keypoints", d.nms.min_keypoints},
            {"instance_threshold", d.nms.instance_threshold}}}};
}

void read_decoder(const json& j, DecoderConfig& d) {
  SectionReader r(j, "decoder");
  r.field("seed_threshold", d.seed_threshold)
      .field("keypoint_threshold", d.keypoint_threshold)
      .field("caf_threshold", d.caf_threshold)
      .field("hr_threshold", d.hr_threshold)
      .field("hr_saturation", d.hr_saturation)
      .field("use_frontier", d.use_frontier)
      .field("use_dense_edges", d.use_dense_edges)
      .custom("seed_rescoring",
              [&](const json& v) { d.seed_rescoring = parse_seed_rescoring(v.get<std::string>()); })
      .field("caf_rescoring", d.caf_rescoring)
      .field("blend_top2", d.blend_top2)
      .field("reverse_match", d.reverse_match)
      .field("force_complete", d.force_complete)
      .field("max_poses", d.max_poses)
      .custom("nms", [&](const json& v) {
        SectionReader n(v, "decoder.nms");
        n.field("r_min", d.nms.r_min)
            .field("alpha", d.nms.alpha)
            .field("min_keypoints", d.nms.min_keypoints)
            .field("instance_threshold", d.nms.instance_threshold)
            .finish();
      });
  r.finish();
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["skeleton"] = c.skeleton;
  j["scene"] = json::parse(scene_config_to_json(c.scene));
  j["encoder"] = {{"stride", c.encoder.stride},
                  {"window", c.encoder.window},
                  {"spread", c.encoder.spread},
                  {"noise_sigma", c.noise_sigma}};
  j["decoder"] = decoder_json(c.decoder);
  j["tracker"] = {{"baseline", std::string(to_string(c.tracker.baseline))},
                  {"match_threshold", c.tracker.match_threshold},
                  {"track_timeout", c.tracker.track_timeout},
                  {"soft_nms_decay", c.tracker.soft_nms.decay}};
  j["loss"] = {{"focal_gamma", c.loss.focal_gamma},
               {"b_min", c.loss.b_min},
               {"b_sigma", c.loss.b_sigma},
               {"bce_clip", c.loss.bce_clip},
               {"field_weights", c.loss.field_weights}};
  j["metrics"] = {{"mota_threshold", c.mota_threshold}};
  return j.dump();
}

void apply_config_json(RunConfig& c, std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  SectionReader top(j, "config");
  top.field("seed", c.seed).field("skeleton", c.skeleton);
  top.custom("scene", [&](const json& v) {
    SceneConfig& s = c.scene;
    SectionReader r(v, "scene");
    r.custom("image_size",
             [&](const json& size) {
               if (!size.is_array() || size.size() != 2) throw FormatError("scene.image_size must be [w, h]");
               s.image_size = {size[0].get<int>(), size[1].get<int>()};
             })
        .field("min_poses", s.min_poses)
        .field("max_poses", s.max_poses)
        .field("min_height", s.min_height)
        .field("max_height", s.max_height)
        .field("allow_overlap", s.allow_overlap)
        .field("margin", s.margin)
        .field("hidden_fraction", s.hidden_fraction)
        .field("absent_fraction", s.absent_fraction)
        .field("articulation_deg", s.articulation_deg)
        .field("frames", s.frames)
        .field("min_speed", s.min_speed)
        .field("max_speed", s.max_speed)
        .field("crossing", s.crossing)
        .field("camera_shift", s.camera_shift)
        .field("max_attempts", s.max_attempts)
        .finish();
  });
  top.custom("encoder", [&](const json& v) {
    SectionReader r(v, "encoder");
    r.field("stride", c.encoder.stride)
        .field("window", c.encoder.window)
        .field("spread", c.encoder.spread)
        .field("noise_sigma", c.noise_sigma)
        .finish();
  });
  top.custom("decoder", [&](const json& v) { read_decoder(v, c.decoder); });
  top.custom("tracker", [&](const json& v) {
    SectionReader r(v, "tracker");
    r.custom("baseline",
             [&](const json& b) { c.tracker.baseline = parse_tracking_baseline(b.get<std::string>()); })
        .field("match_threshold", c.tracker.match_threshold)
        .field("track_timeout", c.tracker.track_timeout)
        .field("soft_nms_decay", c.tracker.soft_nms.decay)
        .finish();
  });
  top.custom("loss", [&](const json& v) {
    SectionReader r(v, "loss");
    r.field("focal_gamma", c.loss.focal_gamma)
        .field("b_min", c.loss.b_min)
        .field("b_sigma", c.loss.b_sigma)
        .field("bce_clip", c.loss.bce_clip)
        .field("field_weights", c.loss.field_weights)
        .finish();
  });
  top.custom("metrics", [&](const json& v) {
    SectionReader r(v, "metrics");
    r.field("mota_threshold", c.mota_threshold).finish();
  });
  top.finish();
}

}  // namespace pifdecode::cli
