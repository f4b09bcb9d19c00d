// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

// Command line front end and the file formats only it needs.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pifdecode/decoder.hpp"
#include "pifdecode/encoder.hpp"
#include "pifdecode/losses.hpp"
#include "pifdecode/model.hpp"
#include "pifdecode/tracker.hpp"

namespace pifdecode::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kInternalError = 3 };

/// Runs one invocation; args excludes the program name. PIFDECODE_CONFIG
/// supplies a config file when --config is absent.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

/// Every parameter a subcommand can take, grouped by module. A config file
/// is a JSON object with any subset of these sections.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string skeleton;  // empty: taken from the input files, coco17 when there are none
  SceneConfig scene;
  EncoderConfig encoder;
  double noise_sigma = 0.0;  // confidence noise added by encode, 0 disables
  DecoderConfig decoder;
  TrackingConfig tracker;  // tracker.decoder mirrors decoder
  LossConfig loss;
  double mota_threshold = 0.5;
};

std::string config_to_json(const RunConfig& config);
/// Overlays the keys present in `json_text` onto `config`. Throws FormatError
/// for unknown keys or wrong types.
void apply_config_json(RunConfig& config, std::string_view json_text);

// ----------------------------------------------------------------- benchmark

struct TimingStat {
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Median and nearest-rank 95th percentile; zeros for no samples.
TimingStat timing_stat(std::vector<double> samples_ms);

struct BenchReport {
  std::size_t frames = 0;
  int repetitions = 0;
  TimingStat total;
  TimingStat accumulate;
  TimingStat seeds;
  TimingStat growth;
  TimingStat nms;
  std::vector<double> total_samples_ms;  // frame-major, repetition-minor
};

/// Single-threaded decode timing of every frame, `repetitions` times each.
/// `cifs[i]` and `cafs[i]` belong to the same frame.
BenchReport bench_decode(const std::vector<FieldTensor>& cifs, const std::vector<FieldTensor>& cafs,
                         const Skeleton& skeleton, const DecoderConfig& config, int repetitions);

/// The reference workload: coco17, 801x801 image at stride 8 (101x101
/// cells) with `instances` people per frame.
struct BenchFieldset {
  Skeleton skeleton;
  std::vector<FieldTensor> cifs;
  std::vector<FieldTensor> cafs;
};
BenchFieldset synthetic_bench_fieldset(std::uint64_t seed, int frames = 1, int instances = 20);

// ---------------------------------------------------------------- pose files

inline constexpr std::string_view kPoseFormat = "pifdecode.poses";
inline constexpr int kPoseFormatVersion = 1;

struct PoseFrame {
  std::int64_t frame = 0;
  std::vector<TrackedPose> poses;  // track_id 0 for untracked output
};

/// First line: {"format", "version", "tracked", "config"}. Then one line per
/// frame: {frame, poses:[{track_id?, score, keypoints:[[x,y,s,size]]}]}.
std::string pose_header_line(bool tracked, const std::string& config_json);
std::string pose_frame_line(const PoseFrame& frame, bool tracked, const DecodeProfile* profile = nullptr);

struct PoseDocument {
  bool tracked = false;
  std::string config_json;
  std::vector<PoseFrame> frames;
};
/// Accepts files with or without the header line. Throws FormatError.
PoseDocument parse_pose_lines(std::string_view text);
PoseDocument read_pose_file(const std::string& path);

}  // namespace pifdecode::cli
