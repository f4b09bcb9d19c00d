// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pifdecode/cli.hpp"
#include "pifdecode/error.hpp"

namespace pifdecode::cli {

using nlohmann::json;

std::string pose_header_line(bool tracked, const std::string& config_json) {
  json h;
  h["format"] = kPoseFormat;
  h["version"] = kPoseFormatVersion;
  h["tracked"] = tracked;
  h["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  return h.dump();
}

std::string pose_frame_line(const PoseFrame& frame, bool tracked, const DecodeProfile* profile) {
  json line;
  line["frame"] = frame.frame;
  line["poses"] = json::array();
  for (const auto& tp : frame.poses) {
    json p;
    if (tracked) p["track_id"] = tp.track_id;
    p["score"] = tp.pose.score;
    p["keypoints"] = json::array();
    for (const auto& kp : tp.pose.keypoints) p["keypoints"].push_back({kp.x, kp.y, kp.score, kp.size});
    line["poses"].push_back(std::move(p));
  }
  if (profile != nullptr) {
    line["profile"] = {{"accumulate_ms", profile->accumulate_ms},
                       {"seeds_ms", profile->seeds_ms},
                       {"growth_ms", profile->growth_ms},
                       {"nms_ms", profile->nms_ms},
                       {"seeds", profile->seeds}};
  }
  return line.dump();
}

PoseDocument parse_pose_lines(std::string_view text) {
  PoseDocument doc;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("format")) {
        if (j.at("format").get<std::string>() != kPoseFormat) {
          throw FormatError("not a pose file: format " + j.at("format").dump());
        }
        if (j.at("version").get<int>() != kPoseFormatVersion) {
          throw FormatError("unsupported pose file version " + j.at("version").dump());
        }
        doc.tracked = j.value("tracked", false);
        if (j.contains("config")) doc.config_json = j.at("config").dump();
        continue;
      }
      PoseFrame frame;
      frame.frame = j.at("frame").get<std::int64_t>();
      for (const auto& p : j.at("poses")) {
        TrackedPose tp;
        tp.track_id = p.value("track_id", std::int64_t{0});
        tp.pose.score = p.at("score").get<double>();
        for (const auto& kp : p.at("keypoints")) {
          if (!kp.is_array() || kp.size() != 4) throw FormatError("keypoints must be [x, y, score, size]");
          tp.pose.keypoints.push_back(
              {kp[0].get<double>(), kp[1].get<double>(), kp[2].get<double>(), kp[3].get<double>()});
        }
        frame.poses.push_back(std::move(tp));
      }
      doc.frames.push_back(std::move(frame));
    } catch (const json::exception& e) {
      throw FormatError("pose line " + std::to_string(number) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("pose line " + std::to_string(number) + ": " + e.what());
    }
  }
  return doc;
}

PoseDocument read_pose_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open pose file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_pose_lines(buffer.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace pifdecode::cli
