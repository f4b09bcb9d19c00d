// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pifdecode/cli.hpp"
#include "pifdecode/error.hpp"
#include "pifdecode/field_file.hpp"
#include "pifdecode/metrics.hpp"
#include "pifdecode/scene.hpp"

namespace pifdecode::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

inline constexpr std::string_view kDefaultSkeleton = "coco17";
inline constexpr std::string_view kDefaultSequenceSkeleton = "posetrack17";  // has temporal edges
inline constexpr std::string_view kFieldFileExtension = ".pfd";

/// Bad flag combinations or values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A library error annotated with the file or frame it came from.
class DataError : public Error {
 public:
  using Error::Error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write " + path);
  file << text;
  if (!file) throw DataError("failed writing " + path);
}

/// Regular files are kept in order; directories expand to their sorted
/// field files.
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && entry.path().extension() == kFieldFileExtension) {
          found.push_back(entry.path().string());
        }
      }
      std::sort(found.begin(), found.end());
      if (found.empty()) throw DataError("no " + std::string(kFieldFileExtension) + " files in " + input);
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(input);
    }
  }
  return files;
}

FieldFile load_field_file(const std::string& path) {
  try {
    return read_field_file(path);
  } catch (const Error& e) {
    throw DataError(path + ": " + e.what());
  }
}

const FieldTensor& require_tensor(const FieldFile& file, FieldKind kind, const std::string& path) {
  const FieldTensor* t = file.find(kind);
  if (t == nullptr) throw DataError(path + ": no " + std::string(to_string(kind)) + " tensor");
  return *t;
}

Skeleton pick_skeleton(const RunConfig& cfg, const std::string& from_input) {
  if (!cfg.skeleton.empty()) return resolve_skeleton(cfg.skeleton);
  if (!from_input.empty()) return resolve_skeleton(from_input);
  return resolve_skeleton(std::string(kDefaultSkeleton));
}

std::string scene_skeleton_name(const SceneSet& set) {
  if (set.config_json.empty()) return {};
  const json j = json::parse(set.config_json);
  return j.contains("skeleton") && j.at("skeleton").is_string() ? j.at("skeleton").get<std::string>() : "";
}

/// Runs f(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure by index order.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_double(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

/// Plain-text table with left-aligned first column and right-aligned rest.
std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream s;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) s << "  ";
      if (c == 0) {
        s << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        s << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    s << "\n";
  }
  return s.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_header(std::string_view format, const RunConfig& cfg) {
  return {{"format", format}, {"version", 1}, {"config", json::parse(config_to_json(cfg))}};
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  std::string out = "-";
  int count = 1;
  int identities = 0;
};

void cmd_synth(const RunConfig& cfg, const SynthArgs& a, std::ostream& out) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  if (a.count > 1 && cfg.scene.frames > 1) throw UsageError("--count applies to single images, not sequences");
  SceneConfig sc = cfg.scene;
  if (a.identities > 0) sc.min_poses = sc.max_poses = a.identities;
  const Skeleton skeleton = pick_skeleton(cfg, sc.frames > 1 ? std::string(kDefaultSequenceSkeleton) : "");
  SceneSet set;
  for (int i = 0; i < a.count; ++i) {
    SceneSet one = generate_scene(cfg.seed + static_cast<std::uint64_t>(i), sc, skeleton);
    if (i == 0) {
      set = std::move(one);
      continue;
    }
    one.frames.front().frame = i;
    set.frames.push_back(std::move(one.frames.front()));
  }
  json provenance = json::parse(set.config_json);
  provenance["count"] = a.count;
  provenance["run"] = json::parse(config_to_json(cfg));
  set.config_json = provenance.dump();
  emit(a.out, serialize_scenes(set) + "\n", out);
}

// ------------------------------------------------------------------- encode

struct EncodeArgs {
  std::string scenes;
  std::string out_dir;
  bool masks = true;
  int jobs = 1;
};

std::string frame_file_name(std::int64_t frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06lld", static_cast<long long>(frame));
  return std::string(name) + std::string(kFieldFileExtension);
}

void cmd_encode(const RunConfig& cfg, const EncodeArgs& a, std::ostream& out) {
  SceneSet set;
  try {
    set = read_scenes(a.scenes);
  } catch (const Error& e) {
    throw DataError(a.scenes + ": " + e.what());
  }
  const Skeleton skeleton = pick_skeleton(cfg, scene_skeleton_name(set));
  fs::create_directories(a.out_dir);
  RunConfig effective = cfg;
  effective.skeleton = skeleton.name;
  const std::string config_json = config_to_json(effective);

  const std::size_t n = set.frames.size();
  std::vector<std::string> written(n);
  parallel_for(n, a.jobs, [&](std::size_t t) {
    const Scene& scene = set.frames[t];
    try {
      FieldFile file;
      file.manifest = {skeleton.name, cfg.encoder.stride, set.image_size, scene.frame, config_json};
      auto cif = encode_cif(scene, skeleton, cfg.encoder);
      auto caf = encode_caf(scene, skeleton, cfg.encoder);
      std::optional<EncodedField> tcaf;
      if (set.sequence && t > 0) tcaf = encode_tcaf(set.frames[t - 1], scene, skeleton, cfg.encoder);
      if (cfg.noise_sigma > 0.0) {
        const std::uint64_t base = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(t) * 3ULL;
        add_confidence_noise(cif.field, {cfg.noise_sigma, base});
        add_confidence_noise(caf.field, {cfg.noise_sigma, base + 1});
        if (tcaf) add_confidence_noise(tcaf->field, {cfg.noise_sigma, base + 2});
      }
      file.tensors.push_back({"cif", std::move(cif.field)});
      file.tensors.push_back({"caf", std::move(caf.field)});
      if (tcaf) file.tensors.push_back({"tcaf", std::move(tcaf->field)});
      if (a.masks) {
        file.tensors.push_back({"cif_masks", cif.masks.tensor()});
        file.tensors.push_back({"caf_masks", caf.masks.tensor()});
        if (tcaf) file.tensors.push_back({"tcaf_masks", tcaf->masks.tensor()});
      }
      const std::string path = (fs::path(a.out_dir) / frame_file_name(scene.frame)).string();
      write_field_file(path, file);
      written[t] = path;
    } catch (const Error& e) {
      throw DataError(a.scenes + " frame " + std::to_string(scene.frame) + ": " + e.what());
    }
  });
  json summary = {{"files", written}, {"skeleton", skeleton.name}, {"stride", cfg.encoder.stride}};
  out << summary.dump() << "\n";
}

// ------------------------------------------------------------------- decode

void add_decoder_options(CLI::App* app, DecoderConfig& d) {
  app->add_option("--seed-threshold", d.seed_threshold, "Minimum seed confidence")->capture_default_str();
  app->add_option("--keypoint-threshold", d.keypoint_threshold, "Minimum association score for a connection")
      ->capture_default_str();
  app->add_option("--caf-threshold", d.caf_threshold, "CAF cells at or below this confidence are ignored")
      ->capture_default_str();
  app->add_option("--hr-threshold", d.hr_threshold, "CIF cells at or below this confidence are not accumulated")
      ->capture_default_str();
  app->add_option("--hr-saturation", d.hr_saturation, "Accumulated mass mapped to confidence 1")
      ->capture_default_str();
  app->add_flag("--frontier,!--no-frontier", d.use_frontier, "Best-first growth through a frontier queue");
  app->add_flag("--dense-edges,!--no-dense-edges", d.use_dense_edges, "Also follow dense skeleton edges");
  app->add_option_function<std::string>(
         "--seed-rescoring", [&d](const std::string& v) { d.seed_rescoring = parse_seed_rescoring(v); },
         "hr, local_3x3_nms or none")
      ->default_str(std::string(to_string(d.seed_rescoring)));
  app->add_flag("--caf-rescoring,!--no-caf-rescoring", d.caf_rescoring, "Weight associations by target HR");
  app->add_flag("--blend,!--no-blend", d.blend_top2, "Blend the two best nearby associations");
  app->add_flag("--reverse-match,!--no-reverse-match", d.reverse_match, "Validate connections backwards");
  app->add_flag("--force-complete,!--no-force-complete", d.force_complete,
                "Fill missing keypoints by a second pass without thresholds");
  app->add_option("--max-poses", d.max_poses, "Poses kept per frame")->capture_default_str();
  app->add_option("--nms-r-min", d.nms.r_min, "Minimum suppression radius, px")->capture_default_str();
  app->add_option("--nms-alpha", d.nms.alpha, "Suppression radius in keypoint sizes")->capture_default_str();
  app->add_option("--min-keypoints", d.nms.min_keypoints, "Detected keypoints a pose needs")->capture_default_str();
  app->add_option("--instance-threshold", d.nms.instance_threshold, "Minimum instance score")
      ->capture_default_str();
}

struct DecodeArgs {
  std::vector<std::string> inputs;
  std::string out = "-";
  bool profile = false;
  int jobs = 1;
};

void cmd_decode(const RunConfig& cfg, const DecodeArgs& a, std::ostream& out, std::ostream& err) {
  const auto files = expand_inputs(a.inputs);
  struct Result {
    PoseFrame frame;
    DecodeProfile profile;
    std::string skeleton;
  };
  std::vector<Result> results(files.size());
  std::mutex skeleton_mutex;
  std::map<std::string, Skeleton> skeletons;
  auto skeleton_for = [&](const std::string& name) {
    std::lock_guard lock(skeleton_mutex);
    const std::string key = cfg.skeleton.empty() ? name : cfg.skeleton;
    auto it = skeletons.find(key);
    if (it == skeletons.end()) it = skeletons.emplace(key, pick_skeleton(cfg, name)).first;
    return it->second;
  };
  parallel_for(files.size(), a.jobs, [&](std::size_t i) {
    const FieldFile file = load_field_file(files[i]);
    const Skeleton skeleton = skeleton_for(file.manifest.skeleton);
    const FieldTensor& cif = require_tensor(file, FieldKind::cif, files[i]);
    const FieldTensor& caf = require_tensor(file, FieldKind::caf, files[i]);
    Result& r = results[i];
    r.skeleton = skeleton.name;
    r.frame.frame = cif.frame();
    try {
      for (auto& pose : decode_frame(cif, caf, skeleton, cfg.decoder, &r.profile)) {
        r.frame.poses.push_back({0, std::move(pose)});
      }
    } catch (const Error& e) {
      throw DataError(files[i] + " frame " + std::to_string(cif.frame()) + ": " + e.what());
    }
  });
  RunConfig effective = cfg;
  if (effective.skeleton.empty() && !results.empty()) effective.skeleton = results.front().skeleton;
  std::ostringstream text;
  text << pose_header_line(false, config_to_json(effective)) << "\n";
  for (const auto& r : results) text << pose_frame_line(r.frame, false, a.profile ? &r.profile : nullptr) << "\n";
  emit(a.out, text.str(), out);
  if (a.profile) {
    std::vector<std::vector<std::string>> rows{{"frame", "accumulate_ms", "seeds_ms", "growth_ms", "nms_ms", "seeds"}};
    for (const auto& r : results) {
      rows.push_back({std::to_string(r.frame.frame), format_double(r.profile.accumulate_ms, 3),
                      format_double(r.profile.seeds_ms, 3), format_double(r.profile.growth_ms, 3),
                      format_double(r.profile.nms_ms, 3), std::to_string(r.profile.seeds)});
    }
    err << table(rows);
  }
}

// -------------------------------------------------------------------- track

struct TrackArgs {
  std::vector<std::string> inputs;
  std::string out = "-";
  bool profile = false;
};

void cmd_track(const RunConfig& cfg, const TrackArgs& a, std::ostream& out, std::ostream& err) {
  const auto files = expand_inputs(a.inputs);
  std::optional<PoseTracker> tracker;
  std::string skeleton_name;
  std::vector<PoseFrame> frames;
  std::vector<double> times;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const FieldFile file = load_field_file(files[i]);
    if (!tracker) {
      const Skeleton skeleton = pick_skeleton(cfg, file.manifest.skeleton);
      skeleton_name = skeleton.name;
      if (cfg.tracker.baseline == TrackingBaseline::tcaf && skeleton.num_temporal_edges() == 0) {
        err << "warning: skeleton " << skeleton.name << " has no temporal edges; every frame starts new tracks\n";
      }
      tracker.emplace(skeleton, cfg.tracker);
    }
    const FieldTensor& cif = require_tensor(file, FieldKind::cif, files[i]);
    const FieldTensor& caf = require_tensor(file, FieldKind::caf, files[i]);
    const FieldTensor* tcaf = file.find(FieldKind::tcaf);
    if (cfg.tracker.baseline == TrackingBaseline::tcaf && i > 0 && tcaf == nullptr) {
      throw DataError(files[i] + ": tcaf tracking needs a TCAF tensor linking it to the previous frame");
    }
    if (i == 0) tcaf = nullptr;  // nothing to link to yet
    try {
      const auto start = std::chrono::steady_clock::now();
      PoseFrame frame{cif.frame(), tracker->step(cif, caf, tcaf)};
      times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
      frames.push_back(std::move(frame));
    } catch (const Error& e) {
      throw DataError(files[i] + " frame " + std::to_string(cif.frame()) + ": " + e.what());
    }
  }
  RunConfig effective = cfg;
  effective.skeleton = skeleton_name;
  std::ostringstream text;
  text << pose_header_line(true, config_to_json(effective)) << "\n";
  for (const auto& f : frames) text << pose_frame_line(f, true) << "\n";
  emit(a.out, text.str(), out);
  if (a.profile) {
    std::vector<std::vector<std::string>> rows{{"frame", "track_ms", "poses"}};
    for (std::size_t i = 0; i < frames.size(); ++i) {
      rows.push_back({std::to_string(frames[i].frame), format_double(times[i], 3),
                      std::to_string(frames[i].poses.size())});
    }
    const auto stat = timing_stat(times);
    rows.push_back({"median", format_double(stat.median_ms, 3), ""});
    rows.push_back({"p95", format_double(stat.p95_ms, 3), ""});
    err << table(rows);
  }
}

// ------------------------------------------------------------------ eval-ap

struct EvalArgs {
  std::string predictions;
  std::string scenes;
  std::string out = "-";
  std::string csv;
  bool split_by_crowd_index = false;
};

struct EvalInputs {
  SceneSet scenes;
  PoseDocument predictions;
  Skeleton skeleton;
  std::vector<std::vector<TrackedPose>> per_frame;  // aligned with scenes.frames
};

EvalInputs load_eval_inputs(const RunConfig& cfg, const EvalArgs& a) {
  EvalInputs in;
  try {
    in.scenes = read_scenes(a.scenes);
  } catch (const Error& e) {
    throw DataError(a.scenes + ": " + e.what());
  }
  in.predictions = read_pose_file(a.predictions);
  std::string name = scene_skeleton_name(in.scenes);
  if (name.empty() && !in.predictions.config_json.empty()) {
    const json c = json::parse(in.predictions.config_json);
    if (c.contains("skeleton") && c.at("skeleton").is_string()) name = c.at("skeleton").get<std::string>();
  }
  in.skeleton = pick_skeleton(cfg, name);
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < in.scenes.frames.size(); ++i) index[in.scenes.frames[i].frame] = i;
  in.per_frame.resize(in.scenes.frames.size());
  for (auto& f : in.predictions.frames) {
    const auto it = index.find(f.frame);
    if (it == index.end()) {
      throw DataError(a.predictions + ": frame " + std::to_string(f.frame) + " has no ground truth in " + a.scenes);
    }
    for (const auto& tp : f.poses) {
      if (static_cast<int>(tp.pose.keypoints.size()) != in.skeleton.num_keypoints()) {
        throw DataError(a.predictions + ": frame " + std::to_string(f.frame) + " has a pose with " +
                        std::to_string(tp.pose.keypoints.size()) + " keypoints, skeleton " + in.skeleton.name +
                        " has " + std::to_string(in.skeleton.num_keypoints()));
      }
    }
    auto& slot = in.per_frame[it->second];
    slot.insert(slot.end(), f.poses.begin(), f.poses.end());
  }
  return in;
}

json ap_json(const ApReport& r) {
  json j = {{"ap", r.ap},
            {"ap50", optional_json(r.ap50)},
            {"ap75", optional_json(r.ap75)},
            {"ap_medium", optional_json(r.ap_medium)},
            {"ap_large", optional_json(r.ap_large)},
            {"ar", r.ar},
            {"num_gt", r.num_gt},
            {"num_predictions", r.num_predictions}};
  j["per_threshold"] = json::array();
  for (const auto& t : r.per_threshold) {
    j["per_threshold"].push_back({{"threshold", t.threshold}, {"ap", t.ap}, {"recall", t.recall}});
  }
  return j;
}

ApReport ap_for(const EvalInputs& in, const std::vector<std::size_t>& frames) {
  std::vector<std::vector<Pose>> preds;
  std::vector<std::vector<GroundTruthAnnotation>> gts;
  for (std::size_t i : frames) {
    preds.emplace_back();
    for (const auto& tp : in.per_frame[i]) preds.back().push_back(tp.pose);
    gts.push_back(in.scenes.frames[i].annotations);
  }
  return average_precision(preds, gts, in.skeleton);
}

void cmd_eval_ap(const RunConfig& cfg, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const EvalInputs in = load_eval_inputs(cfg, a);
  std::vector<std::size_t> all(in.scenes.frames.size());
  std::iota(all.begin(), all.end(), 0);
  const ApReport report = ap_for(in, all);

  json j = report_header("pifdecode.ap_report", cfg);
  j["predictions"] = a.predictions;
  j["scenes"] = a.scenes;
  j["skeleton"] = in.skeleton.name;
  j.update(ap_json(report));
  auto fmt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
  std::vector<std::vector<std::string>> rows{{"subset", "AP", "AP50", "AP75", "AP_M", "AP_L", "AR", "gt"}};
  rows.push_back({"all", format_double(report.ap), fmt(report.ap50), fmt(report.ap75), fmt(report.ap_medium),
                  fmt(report.ap_large), format_double(report.ar), std::to_string(report.num_gt)});
  if (a.split_by_crowd_index) {
    const auto split = split_by_crowd_index(in.scenes.frames);
    json crowd;
    for (const auto& [name, frames] : {std::pair{"easy", &split.easy}, std::pair{"medium", &split.medium},
                                       std::pair{"hard", &split.hard}}) {
      if (frames->empty()) {
        crowd[name] = {{"ap", nullptr}, {"images", 0}};
        rows.push_back({name, "-", "-", "-", "-", "-", "-", "0"});
        continue;
      }
      const ApReport sub = ap_for(in, *frames);
      crowd[name] = {{"ap", sub.ap}, {"images", frames->size()}, {"num_gt", sub.num_gt}};
      rows.push_back({name, format_double(sub.ap), fmt(sub.ap50), fmt(sub.ap75), fmt(sub.ap_medium),
                      fmt(sub.ap_large), format_double(sub.ar), std::to_string(sub.num_gt)});
    }
    j["crowd_index"] = crowd;
  }
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "threshold,recall,precision\n";
    for (const auto& t : report.per_threshold) {
      for (std::size_t r = 0; r < t.precision.size(); ++r) {
        csv << format_double(t.threshold, 2) << "," << format_double(static_cast<double>(r) / 100.0, 2) << ","
            << format_double(t.precision[r], 6) << "\n";
      }
    }
    emit(a.csv, csv.str(), out);
  }
  emit(a.out, j.dump() + "\n", out);
  (a.out.empty() || a.out == "-" ? err : out) << table(rows);
}

// ---------------------------------------------------------------- eval-mota

void cmd_eval_mota(const RunConfig& cfg, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const EvalInputs in = load_eval_inputs(cfg, a);
  if (!in.predictions.tracked) err << "warning: " << a.predictions << " has no track ids; every pose counts as id 0\n";
  const MotReport r = mota(in.per_frame, in.scenes.frames, in.skeleton, cfg.mota_threshold);
  json j = report_header("pifdecode.mot_report", cfg);
  j["predictions"] = a.predictions;
  j["scenes"] = a.scenes;
  j["skeleton"] = in.skeleton.name;
  j["mota"] = r.mota;
  j["motp"] = r.motp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["idsw"] = r.idsw;
  j["num_gt"] = r.num_gt;
  j["matches"] = r.matches;
  j["per_frame"] = json::array();
  for (const auto& f : r.per_frame) {
    j["per_frame"].push_back(
        {{"frame", f.frame}, {"gt", f.gt}, {"matches", f.matches}, {"fp", f.fp}, {"fn", f.fn}, {"idsw", f.idsw}});
  }
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "frame,gt,matches,fp,fn,idsw\n";
    for (const auto& f : r.per_frame) {
      csv << f.frame << "," << f.gt << "," << f.matches << "," << f.fp << "," << f.fn << "," << f.idsw << "\n";
    }
    emit(a.csv, csv.str(), out);
  }
  emit(a.out, j.dump() + "\n", out);
  const std::vector<std::vector<std::string>> rows{
      {"MOTA", "MOTP", "FP", "FN", "IDSW", "gt"},
      {format_double(r.mota), format_double(r.motp), std::to_string(r.fp), std::to_string(r.fn),
       std::to_string(r.idsw), std::to_string(r.num_gt)}};
  (a.out.empty() || a.out == "-" ? err : out) << table(rows);
}

// ---------------------------------------------------------------- eval-loss

struct LossArgs {
  std::string pred;
  std::string target;
  std::string masks;
  std::string kind;
  std::string out = "-";
};

void cmd_eval_loss(const RunConfig& cfg, const LossArgs& a, std::ostream& out) {
  const FieldFile pred = load_field_file(a.pred);
  const FieldFile target = load_field_file(a.target);
  const FieldFile masks_file = a.masks.empty() ? target : load_field_file(a.masks);
  const std::string masks_path = a.masks.empty() ? a.target : a.masks;
  std::vector<FieldKind> kinds;
  if (!a.kind.empty()) {
    kinds.push_back(parse_field_kind(a.kind));
  } else {
    for (FieldKind k : {FieldKind::cif, FieldKind::caf, FieldKind::tcaf}) {
      if (pred.find(k) != nullptr && target.find(k) != nullptr) kinds.push_back(k);
    }
  }
  if (kinds.empty()) throw DataError(a.pred + " and " + a.target + " share no field tensor");
  json j = report_header("pifdecode.loss_report", cfg);
  j["losses"] = json::object();
  for (FieldKind k : kinds) {
    const std::string name(to_string(k));
    const FieldTensor& p = require_tensor(pred, k, a.pred);
    const FieldTensor& t = require_tensor(target, k, a.target);
    const FieldTensor* m = masks_file.find(name + "_masks");
    if (m == nullptr) throw DataError(masks_path + ": no " + name + "_masks tensor");
    LossBreakdown b;
    try {
      b = composite_field_loss(p, t, LossMasks(*m), cfg.loss);
    } catch (const Error& e) {
      throw DataError(name + " loss: " + e.what());
    }
    json channels = json::array();
    for (const auto& c : b.channels) channels.push_back({{"channel", c.channel}, {"sum", c.sum}, {"count", c.count}});
    j["losses"][name] = {{"confidence", b.confidence},
                         {"localization", b.localization},
                         {"scale", b.scale},
                         {"total", b.total},
                         {"channels", channels}};
  }
  emit(a.out, j.dump() + "\n", out);
}

// -------------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<std::string> inputs;
  int repetitions = 5;
  int synthetic_frames = 1;
  int instances = 20;
  std::string out = "-";
  std::string csv;
};

void cmd_bench(const RunConfig& cfg, const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.repetitions < 1) throw UsageError("--repetitions must be >= 1");
  BenchFieldset set;
  std::string source = "synthetic";
  if (a.inputs.empty()) {
    if (a.synthetic_frames < 1 || a.instances < 0) throw UsageError("--synthetic-frames >= 1 and --instances >= 0");
    set = synthetic_bench_fieldset(cfg.seed, a.synthetic_frames, a.instances);
    if (!cfg.skeleton.empty()) set.skeleton = resolve_skeleton(cfg.skeleton);
  } else {
    source = "files";
    for (const auto& path : expand_inputs(a.inputs)) {
      const FieldFile file = load_field_file(path);
      if (set.cifs.empty()) set.skeleton = pick_skeleton(cfg, file.manifest.skeleton);
      set.cifs.push_back(require_tensor(file, FieldKind::cif, path));
      set.cafs.push_back(require_tensor(file, FieldKind::caf, path));
    }
  }
  const BenchReport r = bench_decode(set.cifs, set.cafs, set.skeleton, cfg.decoder, a.repetitions);
  auto stat = [](const TimingStat& s) { return json{{"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}}; };
  json j = report_header("pifdecode.bench_report", cfg);
  j["source"] = source;
  j["frames"] = r.frames;
  j["repetitions"] = r.repetitions;
  j["threads"] = 1;
  j["total"] = stat(r.total);
  j["stages"] = {{"accumulate", stat(r.accumulate)},
                 {"seeds", stat(r.seeds)},
                 {"growth", stat(r.growth)},
                 {"nms", stat(r.nms)}};
  if (!a.csv.empty()) {
    std::ostringstream csv;
    csv << "frame,repetition,total_ms\n";
    for (std::size_t i = 0; i < r.total_samples_ms.size(); ++i) {
      csv << i / static_cast<std::size_t>(r.repetitions) << "," << i % static_cast<std::size_t>(r.repetitions) << ","
          << format_double(r.total_samples_ms[i], 4) << "\n";
    }
    emit(a.csv, csv.str(), out);
  }
  emit(a.out, j.dump() + "\n", out);
  std::vector<std::vector<std::string>> rows{{"stage", "median_ms", "p95_ms"}};
  for (const auto& [name, s] : {std::pair{"accumulate", r.accumulate}, std::pair{"seeds", r.seeds},
                                std::pair{"growth", r.growth}, std::pair{"nms", r.nms}, std::pair{"total", r.total}}) {
    rows.push_back({name, format_double(s.median_ms, 3), format_double(s.p95_ms, 3)});
  }
  (a.out.empty() || a.out == "-" ? err : out) << table(rows);
}

// -------------------------------------------------------- validate-skeleton

int cmd_validate_skeleton(const std::string& name, std::ostream& out, std::ostream& err) {
  const Skeleton s = resolve_skeleton(name);
  const auto problems = validate_skeleton(s);
  if (problems.empty()) {
    out << "valid: " << s.name << " (" << s.num_keypoints() << " keypoints, " << s.num_edges() << " edges, "
        << s.num_temporal_edges() << " temporal edges)\n";
    return kOk;
  }
  for (const auto& p : problems) err << "invalid: " << p << "\n";
  return kDataError;
}

/// Finds --config in the raw arguments before the parser runs, so the file
/// can seed the defaults that flags then override.
std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  const char* env = std::getenv("PIFDECODE_CONFIG");
  return env != nullptr ? std::string(env) : std::string();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  const std::string config_path = find_config_path(args);
  if (!config_path.empty()) {
    try {
      apply_config_json(cfg, read_text(config_path));
    } catch (const Error& e) {
      err << "error: config " << config_path << ": " << e.what() << "\n";
      return kUsageError;
    }
  }

  CLI::App app{"Composite-field pose decoding, tracking and evaluation", "pifdecode"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_flag;
  app.add_option("--config", config_flag, "JSON config file (default: $PIFDECODE_CONFIG)");

  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes");
  SynthArgs synth_args;
  synth->add_option("-o,--out", synth_args.out, "Scene JSON output, - for stdout")->capture_default_str();
  synth->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  synth->add_option("--skeleton", cfg.skeleton, "Builtin skeleton name or JSON file");
  synth->add_option("--count", synth_args.count, "Independent single-frame scenes")->capture_default_str();
  synth->add_option("--frames", cfg.scene.frames, "Frames per sequence")->capture_default_str();
  synth->add_option("--identities", synth_args.identities, "Exact number of poses (sets min and max)");
  synth->add_option("--min-poses", cfg.scene.min_poses)->capture_default_str();
  synth->add_option("--max-poses", cfg.scene.max_poses)->capture_default_str();
  synth->add_option("--width", cfg.scene.image_size.width)->capture_default_str();
  synth->add_option("--height", cfg.scene.image_size.height)->capture_default_str();
  synth->add_option("--min-height", cfg.scene.min_height, "Minimum pose height, px")->capture_default_str();
  synth->add_option("--max-height", cfg.scene.max_height, "Maximum pose height, px")->capture_default_str();
  synth->add_flag("--allow-overlap,!--no-overlap", cfg.scene.allow_overlap);
  synth->add_option("--margin", cfg.scene.margin, "Padding between pose boxes, px")->capture_default_str();
  synth->add_option("--hidden-fraction", cfg.scene.hidden_fraction)->capture_default_str();
  synth->add_option("--absent-fraction", cfg.scene.absent_fraction)->capture_default_str();
  synth->add_option("--articulation", cfg.scene.articulation_deg, "Limb angle jitter, degrees")
      ->capture_default_str();
  synth->add_option("--min-speed", cfg.scene.min_speed, "px / frame")->capture_default_str();
  synth->add_option("--max-speed", cfg.scene.max_speed, "px / frame")->capture_default_str();
  synth->add_flag("--crossing", cfg.scene.crossing, "Two identical-looking identities cross paths");
  synth->add_option("--camera-shift", cfg.scene.camera_shift, "Max per-frame global jitter, px")
      ->capture_default_str();

  auto* encode = app.add_subcommand("encode", "Encode scenes into field files");
  EncodeArgs encode_args;
  encode->add_option("--scenes", encode_args.scenes, "Scene JSON")->required();
  encode->add_option("--out-dir", encode_args.out_dir, "Directory for frame_NNNNNN.pfd files")->required();
  encode->add_option("--skeleton", cfg.skeleton, "Default: the skeleton recorded in the scenes");
  encode->add_option("--stride", cfg.encoder.stride)->capture_default_str();
  encode->add_option("--window", cfg.encoder.window, "CIF target window side, cells")->capture_default_str();
  encode->add_option("--spread", cfg.encoder.spread)->capture_default_str();
  encode->add_option("--noise", cfg.noise_sigma, "Gaussian confidence noise sigma")->capture_default_str();
  encode->add_option("--seed", cfg.seed, "Noise seed")->capture_default_str();
  encode->add_flag("--masks,!--no-masks", encode_args.masks, "Store loss masks");
  encode->add_option("--jobs", encode_args.jobs, "Worker threads")->capture_default_str();

  auto* decode = app.add_subcommand("decode", "Decode field files into poses");
  DecodeArgs decode_args;
  decode->add_option("inputs", decode_args.inputs, "Field files or directories")->required();
  decode->add_option("-o,--out", decode_args.out, "JSON-lines output, - for stdout")->capture_default_str();
  decode->add_option("--skeleton", cfg.skeleton, "Default: the skeleton recorded in each file");
  decode->add_flag("--profile", decode_args.profile, "Per-stage timings");
  decode->add_option("--jobs", decode_args.jobs, "Worker threads")->capture_default_str();
  add_decoder_options(decode, cfg.decoder);

  auto* track = app.add_subcommand("track", "Track poses through an ordered list of field files");
  TrackArgs track_args;
  track->add_option("inputs", track_args.inputs, "Field files or directories, in frame order")->required();
  track->add_option("-o,--out", track_args.out, "JSON-lines output, - for stdout")->capture_default_str();
  track->add_option("--skeleton", cfg.skeleton, "Default: the skeleton recorded in the first file");
  track->add_flag("--profile", track_args.profile, "Per-frame timings");
  track->add_option_function<std::string>(
           "--baseline", [&cfg](const std::string& v) { cfg.tracker.baseline = parse_tracking_baseline(v); },
           "tcaf, hungarian-euclidean or hungarian-oks")
      ->default_str(std::string(to_string(cfg.tracker.baseline)));
  track->add_option("--match-threshold", cfg.tracker.match_threshold, "<= 0: 50 px or 0.3 OKS")
      ->capture_default_str();
  track->add_option("--track-timeout", cfg.tracker.track_timeout, "Frames a track survives unmatched")
      ->capture_default_str();
  track->add_option("--soft-nms-decay", cfg.tracker.soft_nms.decay, "Score factor of suppressed keypoints")
      ->capture_default_str();
  add_decoder_options(track, cfg.decoder);

  auto* eval_ap = app.add_subcommand("eval-ap", "COCO-style keypoint AP");
  EvalArgs ap_args;
  eval_ap->add_option("--predictions", ap_args.predictions, "Pose JSON lines")->required();
  eval_ap->add_option("--scenes", ap_args.scenes, "Ground-truth scene JSON")->required();
  eval_ap->add_option("--skeleton", cfg.skeleton);
  eval_ap->add_option("-o,--out", ap_args.out, "JSON report, - for stdout")->capture_default_str();
  eval_ap->add_option("--csv", ap_args.csv, "Precision-recall curves as CSV");
  eval_ap->add_flag("--split-by-crowd-index", ap_args.split_by_crowd_index, "Easy, medium and hard subsets");

  auto* eval_mota = app.add_subcommand("eval-mota", "CLEAR-MOT tracking metrics");
  EvalArgs mota_args;
  eval_mota->add_option("--predictions", mota_args.predictions, "Tracked pose JSON lines")->required();
  eval_mota->add_option("--scenes", mota_args.scenes, "Ground-truth sequence JSON")->required();
  eval_mota->add_option("--skeleton", cfg.skeleton);
  eval_mota->add_option("--match-threshold", cfg.mota_threshold, "Minimum OKS of a match")->capture_default_str();
  eval_mota->add_option("-o,--out", mota_args.out, "JSON report, - for stdout")->capture_default_str();
  eval_mota->add_option("--csv", mota_args.csv, "Per-frame counts as CSV");

  auto* eval_loss = app.add_subcommand("eval-loss", "Composite field loss of predictions against targets");
  LossArgs loss_args;
  eval_loss->add_option("--pred", loss_args.pred, "Predicted field file")->required();
  eval_loss->add_option("--target", loss_args.target, "Target field file")->required();
  eval_loss->add_option("--masks", loss_args.masks, "Field file with <kind>_masks tensors (default: --target)");
  eval_loss->add_option("--kind", loss_args.kind, "cif, caf or tcaf (default: every shared kind)");
  eval_loss->add_option("--focal-gamma", cfg.loss.focal_gamma)->capture_default_str();
  eval_loss->add_option("--b-min", cfg.loss.b_min, "px")->capture_default_str();
  eval_loss->add_option("--b-sigma", cfg.loss.b_sigma)->capture_default_str();
  eval_loss->add_option("--bce-clip", cfg.loss.bce_clip)->capture_default_str();
  eval_loss->add_option("--field-weights", cfg.loss.field_weights, "One weight per field");
  eval_loss->add_option("-o,--out", loss_args.out, "JSON report, - for stdout")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Single-threaded decode timing");
  BenchArgs bench_args;
  bench->add_option("inputs", bench_args.inputs, "Field files or directories (default: synthetic workload)");
  bench->add_option("--repetitions", bench_args.repetitions)->capture_default_str();
  bench->add_option("--synthetic-frames", bench_args.synthetic_frames)->capture_default_str();
  bench->add_option("--instances", bench_args.instances, "People per synthetic frame")->capture_default_str();
  bench->add_option("--seed", cfg.seed)->capture_default_str();
  bench->add_option("--skeleton", cfg.skeleton);
  bench->add_option("-o,--out", bench_args.out, "JSON report, - for stdout")->capture_default_str();
  bench->add_option("--csv", bench_args.csv, "Raw per-frame samples as CSV");
  add_decoder_options(bench, cfg.decoder);

  auto* validate = app.add_subcommand("validate-skeleton", "Check a skeleton definition");
  std::string validate_name;
  validate->add_option("skeleton", validate_name, "Builtin name or JSON file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  } catch (const Error& e) {  // parse callbacks such as --baseline
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  cfg.tracker.decoder = cfg.decoder;
  try {
    validate_decoder_config(cfg.decoder);
    if (cfg.encoder.stride < 1) throw DomainError("stride must be >= 1");
    if (cfg.tracker.track_timeout < 0) throw DomainError("track timeout must be >= 0");
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (synth->parsed()) cmd_synth(cfg, synth_args, out);
    if (encode->parsed()) cmd_encode(cfg, encode_args, out);
    if (decode->parsed()) cmd_decode(cfg, decode_args, out, err);
    if (track->parsed()) cmd_track(cfg, track_args, out, err);
    if (eval_ap->parsed()) cmd_eval_ap(cfg, ap_args, out, err);
    if (eval_mota->parsed()) cmd_eval_mota(cfg, mota_args, out, err);
    if (eval_loss->parsed()) cmd_eval_loss(cfg, loss_args, out);
    if (bench->parsed()) cmd_bench(cfg, bench_args, out, err);
    if (validate->parsed()) return cmd_validate_skeleton(validate_name, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pifdecode::cli
