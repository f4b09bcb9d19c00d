// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner. Each criterion prints one line:
//   PASS|FAIL|WARN  <id>  <name>  (<measurements>, <seconds>)
// The exit status is 1 when any non-warning criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "pifdecode/cli.hpp"
#include "pifdecode/decoder.hpp"
#include "pifdecode/encoder.hpp"
#include "pifdecode/field_file.hpp"
#include "pifdecode/hungarian.hpp"
#include "pifdecode/losses.hpp"
#include "pifdecode/metrics.hpp"
#include "pifdecode/tracker.hpp"
#include "support.hpp"

#ifndef PIFDECODE_BASELINE_FILE
#define PIFDECODE_BASELINE_FILE "bench/baseline.json"
#endif

using namespace pifdecode;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<std::vector<GroundTruthAnnotation>> annotations_of(const std::vector<Scene>& scenes) {
  std::vector<std::vector<GroundTruthAnnotation>> out;
  for (const auto& s : scenes) out.push_back(s.annotations);
  return out;
}

// Small union-find over keypoint indices.
struct Components {
  explicit Components(int n) : parent(static_cast<std::size_t>(n)) {
    for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    return i;
  }
  void join(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
  bool connected(int n) {
    for (int i = 1; i < n; ++i) {
      if (find(i) != find(0)) return false;
    }
    return true;
  }
  std::vector<int> parent;
};

SceneConfig sequence_config(int frames, int min_poses, int max_poses, double speed_lo, double speed_hi) {
  SceneConfig c;
  c.image_size = {641, 641};
  c.min_poses = min_poses;
  c.max_poses = max_poses;
  c.min_height = 70.0;
  c.max_height = 110.0;
  c.frames = frames;
  c.min_speed = speed_lo;
  c.max_speed = speed_hi;
  return c;
}

// ------------------------------------------------------------------ 1

Outcome round_trip() {
  const Skeleton sk = builtin_skeleton("coco17");
  const auto start = std::chrono::steady_clock::now();
  std::vector<Scene> scenes;
  std::vector<std::vector<Pose>> preds;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene scene = generate_scene(1000 + seed, SceneConfig{}, sk).frames.front();
    FieldFile file;
    file.manifest.skeleton = sk.name;
    file.manifest.stride = 8;
    file.manifest.image_size = scene.image_size;
    file.manifest.frame = static_cast<std::int64_t>(seed);
    file.tensors.push_back({"cif", encode_cif(scene, sk).field});
    file.tensors.push_back({"caf", encode_caf(scene, sk).field});
    const FieldFile back = parse_field_file(serialize_field_file(file));

    cli::PoseFrame frame{static_cast<std::int64_t>(seed), {}};
    for (auto& p : decode_frame(*back.find("cif"), *back.find("caf"), sk)) frame.poses.push_back({0, std::move(p)});
    const auto doc = cli::parse_pose_lines(cli::pose_header_line(false, "") + "\n" + cli::pose_frame_line(frame, false));
    std::vector<Pose> poses;
    for (const auto& tp : doc.frames.at(0).poses) poses.push_back(tp.pose);

    worst = std::max(worst, testing::mean_keypoint_error(poses, scene, sk));
    preds.push_back(std::move(poses));
    scenes.push_back(scene);
  }
  const double ap = average_precision(preds, annotations_of(scenes), sk).ap;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {ap >= 1.0 - 1e-12 && worst < 1.0 && secs < 30.0,
          "AP " + fmt("%.6f", ap) + ", worst mean error " + fmt("%.4f", worst) + " px, " + fmt("%.1f", secs) +
              " s wall"};
}

// ------------------------------------------------------------------ 2

Outcome dense_bridging() {
  const Skeleton sk = builtin_skeleton("coco17-dense");
  const int n = sk.num_keypoints();
  // Sparse edges whose loss splits the sparse graph but not sparse + dense.
  std::vector<int> bridges;
  for (int e = 0; e < sk.num_edges(); ++e) {
    if (sk.edges[static_cast<std::size_t>(e)].dense) continue;
    Components sparse(n), with_dense(n);
    for (int o = 0; o < sk.num_edges(); ++o) {
      if (o == e) continue;
      const auto& edge = sk.edges[static_cast<std::size_t>(o)];
      if (!edge.dense) sparse.join(edge.source, edge.target);
      with_dense.join(edge.source, edge.target);
    }
    if (!sparse.connected(n) && with_dense.connected(n)) bridges.push_back(e);
  }
  if (bridges.empty()) return {false, "no bridgeable sparse edge"};

  SceneConfig sc;
  sc.max_poses = 5;
  std::mt19937_64 rng(2);
  int exact_dense = 0, split_sparse = 0, fragments = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene scene = generate_scene(2000 + seed, sc, sk).frames.front();
    auto f = testing::perfect_fields(scene, sk);
    for (const auto& a : scene.annotations) {
      zero_edge_for_annotation(f.caf, sk, bridges[rng() % bridges.size()], a);
    }
    DecoderConfig cfg;
    cfg.use_dense_edges = true;
    const auto dense = decode_frame(f.cif, f.caf, sk, cfg);
    bool whole = dense.size() == scene.annotations.size();
    for (const auto& p : dense) whole = whole && p.num_detected() == n;
    exact_dense += whole;
    cfg.use_dense_edges = false;
    const auto sparse = decode_frame(f.cif, f.caf, sk, cfg);
    split_sparse += sparse.size() == 2 * scene.annotations.size();
    fragments += static_cast<int>(sparse.size() - scene.annotations.size());
  }
  return {exact_dense == 50 && split_sparse == 50,
          "dense exact on " + std::to_string(exact_dense) + "/50, sparse split on " + std::to_string(split_sparse) +
              "/50 (" + std::to_string(fragments) + " extra instances)"};
}

// ------------------------------------------------------------------ 3

Outcome gradients() {
  const auto checks = testing::loss_gradient_suite(1000, 3);
  bool ok = true;
  std::string detail;
  for (const auto& c : checks) {
    const bool good = c.max_relative_error <= 1e-4;
    ok = ok && good;
    if (!good) detail += c.component + " max rel " + fmt("%.2e", c.max_relative_error) + "; ";
  }
  LossConfig cfg;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<> u(-50, 50);
  double worst_argmin = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Point2 v{u(rng), u(rng)}, vh{u(rng), u(rng)};
    const double l2 = std::sqrt((v.x - vh.x) * (v.x - vh.x) + (v.y - vh.y) * (v.y - vh.y) + cfg.b_min * cfg.b_min);
    worst_argmin = std::max(worst_argmin, std::abs(testing::laplace_argmin_b(v, vh, cfg) - l2) / l2);
  }
  ok = ok && worst_argmin <= 1e-3;
  if (detail.empty()) detail = "all components within 1e-4; ";
  return {ok, detail + "Laplace argmin rel error " + fmt("%.1e", worst_argmin)};
}

// ------------------------------------------------------------------ 4

Outcome loss_constants() {
  const double w = (1.0 - 1e-9) * (1.0 - 1e-9);
  const double focal = focal_bce(1, 1e-9);
  const double scale = scale_loss(2.0, 1.0);
  return {focal == w * 5.0 && scale == 1.0 / 6.0,
          "focal_bce(1, 1e-9) = " + fmt("%.17g", focal) + ", scale_loss(2, 1) = " + fmt("%.17g", scale)};
}

// ------------------------------------------------------------------ 5

void set_caf(FieldTensor& caf, int e, int gy, int gx, double c, Point2 a, Point2 b) {
  const double v[9] = {c, a.x, a.y, b.x, b.y, 1.0, 1.0, 4.0, 4.0};
  for (int ch = 0; ch < 9; ++ch) caf.at(ch, e, gy, gx) = static_cast<float>(v[ch]);
}

Outcome frontier() {
  const Skeleton sk = builtin_skeleton("coco17");
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene scene = generate_scene(5000 + seed, SceneConfig{}, sk).frames.front();
    const auto f = testing::perfect_fields(scene, sk);
    DecoderConfig cfg;
    const auto serialize = [&](const std::vector<Pose>& poses) {
      cli::PoseFrame frame;
      for (const auto& p : poses) frame.poses.push_back({0, p});
      return cli::pose_frame_line(frame, false);
    };
    const std::string with = serialize(decode_frame(f.cif, f.caf, sk, cfg));
    cfg.use_frontier = false;
    identical += with == serialize(decode_frame(f.cif, f.caf, sk, cfg));
  }

  // Ambiguous three-keypoint graphs: two candidates per non-seed keypoint,
  // conflicting association strengths along different paths.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<> conf(0.2, 1.0), jitter(-6, 6);
  int agree = 0, ambiguous = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Skeleton tri;
    tri.name = "tri";
    tri.keypoints = {"a", "b", "c"};
    tri.sigmas = {0.05, 0.05, 0.05};
    tri.edges = {{0, 1, false}, {1, 2, false}};
    if (rng() % 2) tri.edges.push_back({0, 2, false});

    FieldTensor caf = FieldTensor::for_image(FieldKind::caf, tri.num_edges(), {241, 241}, 8);
    const Point2 a{120 + jitter(rng), 120 + jitter(rng)};
    const Point2 b[2] = {{60 + jitter(rng), 60 + jitter(rng)}, {180 + jitter(rng), 60 + jitter(rng)}};
    const Point2 c[2] = {{60 + jitter(rng), 180 + jitter(rng)}, {180 + jitter(rng), 180 + jitter(rng)}};
    int row[3] = {2, 2, 2};
    for (int i = 0; i < 2; ++i) set_caf(caf, 0, row[0]++, 3 + 10 * i, conf(rng), a, b[i]);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (rng() % 4 == 0) continue;
        set_caf(caf, 1, row[1]++, 3 + 10 * j, conf(rng), b[i], c[j]);
      }
    }
    if (tri.num_edges() == 3) {
      for (int j = 0; j < 2; ++j) set_caf(caf, 2, row[2]++, 3 + 10 * j, conf(rng), a, c[j]);
    }
    const AssociationIndex index(caf, 0.1);
    DecoderConfig cfg;
    cfg.keypoint_threshold = 0.05;
    Pose seed;
    seed.keypoints.resize(3);
    seed.keypoints[0] = {a.x, a.y, 1.0, 4.0};
    seed.score = 1.0;
    const Pose grown = grow_pose(seed, tri, index, nullptr, cfg);
    agree += grown == testing::reference_best_first(seed, tri, index, nullptr, cfg);
    cfg.use_frontier = false;
    ambiguous += !(grow_pose(seed, tri, index, nullptr, cfg) == grown);
  }
  return {identical == 100 && agree == trials && ambiguous > 0,
          "byte-identical on " + std::to_string(identical) + "/100, best-first agreement " + std::to_string(agree) +
              "/" + std::to_string(trials) + " (" + std::to_string(ambiguous) + " where eager growth differs)"};
}

// ------------------------------------------------------------------ 6

Outcome rescoring() {
  const Skeleton sk = builtin_skeleton("coco17");
  SceneConfig sc;
  sc.image_size = {401, 401};
  sc.max_poses = 4;
  sc.max_height = 120.0;
  std::vector<Scene> scenes;
  std::vector<testing::Fields> fields;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    scenes.push_back(generate_scene(6000 + seed, sc, sk).frames.front());
    auto f = testing::perfect_fields(scenes.back(), sk);
    add_confidence_noise(f.cif, {0.1, 2 * seed});
    add_confidence_noise(f.caf, {0.1, 2 * seed + 1});
    fields.push_back(std::move(f));
  }
  const auto ap = [&](const DecoderConfig& cfg) {
    std::vector<std::vector<Pose>> preds;
    for (const auto& f : fields) preds.push_back(decode_frame(f.cif, f.caf, sk, cfg));
    return average_precision(preds, annotations_of(scenes), sk).ap;
  };
  DecoderConfig cfg;
  const double full = ap(cfg);
  cfg.caf_rescoring = false;
  const double no_caf = ap(cfg);
  cfg = {};
  cfg.seed_rescoring = SeedRescoring::none;
  const double no_seed = ap(cfg);
  return {full >= no_caf && full >= no_seed,
          "AP full " + fmt("%.4f", full) + ", no CAF rescoring " + fmt("%.4f", no_caf) + ", no seed rescoring " +
              fmt("%.4f", no_seed)};
}

// ------------------------------------------------------------------ 7, 8, 9

MotReport track(const SceneSet& set, const std::vector<testing::FrameFields>& frames, const Skeleton& sk,
                TrackingBaseline baseline) {
  TrackingConfig cfg;
  cfg.baseline = baseline;
  const auto out = testing::run_tracker(frames, sk, cfg);
  return mota(out, set.frames, sk);
}

Outcome steady_sequences() {
  const Skeleton sk = builtin_skeleton("posetrack17");
  int perfect = 0, hungarian_clean = 0;
  double worst_mota = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto set = generate_scene(7000 + seed, sequence_config(20, 1, 3, 2.0, 6.0), sk);
    const auto frames = testing::sequence_fields(set, sk);
    const auto t = track(set, frames, sk, TrackingBaseline::tcaf);
    worst_mota = std::min(worst_mota, t.mota);
    perfect += t.mota == 1.0 && t.idsw == 0;
    hungarian_clean += track(set, frames, sk, TrackingBaseline::hungarian_euclidean).idsw == 0;
  }
  return {perfect == 50 && hungarian_clean == 50,
          "TCAF MOTA 1 with no IDSW on " + std::to_string(perfect) + "/50 (worst MOTA " + fmt("%.4f", worst_mota) +
              "), hungarian-euclidean without IDSW on " + std::to_string(hungarian_clean) + "/50"};
}

Outcome crossing_sequences() {
  const Skeleton sk = builtin_skeleton("posetrack17");
  SceneConfig sc = sequence_config(20, 2, 2, 0.0, 0.0);
  sc.crossing = true;
  std::size_t total_tcaf = 0, total_hungarian = 0;
  int strictly_fewer = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto set = generate_scene(8000 + seed, sc, sk);
    const auto frames = testing::sequence_fields(set, sk);
    const std::size_t a = track(set, frames, sk, TrackingBaseline::tcaf).idsw;
    const std::size_t b = track(set, frames, sk, TrackingBaseline::hungarian_euclidean).idsw;
    total_tcaf += a;
    total_hungarian += b;
    strictly_fewer += a < b;
  }
  return {total_tcaf <= total_hungarian && strictly_fewer >= 10,
          "IDSW TCAF " + std::to_string(total_tcaf) + " vs hungarian-euclidean " + std::to_string(total_hungarian) +
              ", strictly fewer on " + std::to_string(strictly_fewer) + "/50"};
}

Outcome temporal_occlusion() {
  const Skeleton sk = builtin_skeleton("posetrack17");
  const std::vector<std::pair<std::string, std::string>> limbs = {{"left_knee", "left_ankle"},
                                                                  {"right_knee", "right_ankle"},
                                                                  {"left_elbow", "left_wrist"},
                                                                  {"right_elbow", "right_wrist"}};
  std::mt19937_64 rng(9);
  int total = 0, recovered = 0, recovered_single = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto set = generate_scene(9000 + seed, sequence_config(8, 1, 3, 2.0, 4.0), sk);
    auto frames = testing::sequence_fields(set, sk);
    const auto& limb = limbs[rng() % limbs.size()];
    const int k1 = sk.keypoint_index(limb.first), k2 = sk.keypoint_index(limb.second);
    for (std::size_t t = 3; t < 6; ++t) {
      for (int e = 0; e < sk.num_edges(); ++e) {
        const auto& edge = sk.edges[static_cast<std::size_t>(e)];
        if (edge.source != k1 && edge.source != k2 && edge.target != k1 && edge.target != k2) continue;
        for (int ch = 0; ch < frames[t].caf.channels(); ++ch) {
          for (float& v : frames[t].caf.plane(ch, e)) v = 0.0f;
        }
      }
    }
    const auto out = testing::run_tracker(frames, sk, {});
    // A limb keypoint counts when the pose matched to its person carries it
    // within 5 px.
    const auto count = [&](const std::vector<Pose>& poses, const GroundTruthAnnotation& gt) {
      const Pose* best = nullptr;
      double best_oks = 0.0;
      for (const auto& p : poses) {
        const double o = oks(p, gt, sk);
        if (o > best_oks) best_oks = o, best = &p;
      }
      int hits = 0;
      for (int k : {k1, k2}) {
        const auto& g = gt.keypoints[static_cast<std::size_t>(k)];
        if (best == nullptr) continue;
        const auto& kp = best->keypoints[static_cast<std::size_t>(k)];
        hits += kp.detected() && std::hypot(kp.x - g.x, kp.y - g.y) < 5.0;
      }
      return hits;
    };
    for (std::size_t t = 3; t < 6; ++t) {
      std::vector<Pose> tracked, single = decode_frame(frames[t].cif, frames[t].caf, sk);
      for (const auto& tp : out[t]) tracked.push_back(tp.pose);
      for (const auto& gt : set.frames[t].annotations) {
        total += 2;
        recovered += count(tracked, gt);
        recovered_single += count(single, gt);
      }
    }
  }
  const double recall = static_cast<double>(recovered) / total;
  return {recall >= 0.95, "limb keypoint recall " + fmt("%.4f", recall) + " over " + std::to_string(total) +
                              " keypoints (single-frame decode " +
                              fmt("%.4f", static_cast<double>(recovered_single) / total) + ")"};
}

// ------------------------------------------------------------------ 10

Outcome hungarian() {
  std::mt19937_64 rng(10);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const int rows = static_cast<int>(rng() % 7), cols = static_cast<int>(rng() % 7);
    std::vector<double> cost(static_cast<std::size_t>(rows * cols));
    const bool ties = rng() % 3 == 0;
    for (auto& c : cost) c = ties ? static_cast<double>(rng() % 4) : std::uniform_real_distribution<>(0, 100)(rng);
    const auto assign = hungarian_assign(cost, rows, cols);
    const double got = assignment_cost(cost, cols, assign);
    agree += std::abs(got - testing::brute_force_assignment(cost, rows, cols)) <= 1e-9;
  }
  return {agree == 1000, "optimal on " + std::to_string(agree) + "/1000 matrices up to 6x6"};
}

// ------------------------------------------------------------------ 11

Outcome metric_oracles() {
  const Skeleton sk = builtin_skeleton("posetrack17");
  std::mt19937_64 rng(11);
  std::normal_distribution<> jitter(0.0, 1.0);
  std::uniform_real_distribution<> u(0.0, 1.0);
  int sequences = 0, counts_ok = 0, engineered_ok = 0;
  long fp = 0, fn = 0, idsw = 0;
  double worst_mota = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    SceneConfig sc = sequence_config(2 + static_cast<int>(rng() % 9), 1, 3, 1.0, 4.0);
    sc.image_size = {481, 481};
    const auto set = generate_scene(rng(), sc, sk);
    std::map<std::int64_t, std::int64_t> id_of;
    for (const auto& a : set.frames.front().annotations) id_of[a.id] = 100 + a.id;
    const std::size_t swap_at = rng() % set.frames.size();
    long dropped = 0, added = 0;
    std::vector<std::vector<TrackedPose>> tracked;
    for (std::size_t t = 0; t < set.frames.size(); ++t) {
      const auto& anns = set.frames[t].annotations;
      if (t == swap_at && anns.size() >= 2 && u(rng) < 0.7) std::swap(id_of[anns[0].id], id_of[anns[1].id]);
      std::vector<TrackedPose> frame;
      for (const auto& a : anns) {
        if (u(rng) < 0.1) {
          ++dropped;
          continue;
        }
        Pose p = testing::pose_from(a, u(rng));
        for (auto& kp : p.keypoints) kp.x += jitter(rng), kp.y += jitter(rng);
        frame.push_back({id_of[a.id], p});
      }
      if (u(rng) < 0.2) {
        Pose far = testing::pose_from(anns.front(), u(rng));
        for (auto& kp : far.keypoints) kp.x += 2000.0;
        frame.push_back({999, far});
        ++added;
      }
      tracked.push_back(std::move(frame));
    }
    const MotReport got = mota(tracked, set.frames, sk);
    const auto ref = testing::reference_mota(tracked, set.frames, sk.sigmas, 0.5);
    ++sequences;
    const bool same = static_cast<long>(got.fp) == ref.fp && static_cast<long>(got.fn) == ref.fn &&
                      static_cast<long>(got.idsw) == ref.idsw && std::abs(got.mota - ref.mota) <= 1e-12;
    counts_ok += same;
    engineered_ok += static_cast<long>(got.fp) == added && static_cast<long>(got.fn) == dropped;
    worst_mota = std::max(worst_mota, std::abs(got.mota - ref.mota));
    fp += ref.fp, fn += ref.fn, idsw += ref.idsw;
  }

  int oks_ok = 0;
  const int pairs = 1000;
  for (int i = 0; i < pairs; ++i) {
    const auto set = generate_scene(rng(), SceneConfig{.image_size = {401, 401}, .max_poses = 1, .max_height = 150,
                                                       .hidden_fraction = 0.2, .absent_fraction = 0.1},
                                    sk);
    const auto& gt = set.frames.front().annotations.front();
    Pose p = testing::pose_from(gt, 0.9);
    const double spread = 10.0 * u(rng);
    for (auto& kp : p.keypoints) {
      kp.x += spread * jitter(rng), kp.y += spread * jitter(rng);
      if (u(rng) < 0.1) kp.score = 0.0;
    }
    const double area = 100.0 + 20000.0 * u(rng);
    oks_ok += std::abs(oks(p, gt, sk, area) - testing::reference_oks(p, gt, sk.sigmas, area)) <= 1e-12 &&
              std::abs(oks(p, gt, sk) - testing::reference_oks(p, gt, sk.sigmas, testing::reference_area(gt))) <= 1e-12;
  }
  return {counts_ok == sequences && engineered_ok == sequences && oks_ok == pairs && idsw > 0 && fp > 0 && fn > 0,
          "MOTA equal on " + std::to_string(counts_ok) + "/" + std::to_string(sequences) + " (FP " +
              std::to_string(fp) + ", FN " + std::to_string(fn) + ", IDSW " + std::to_string(idsw) +
              ", max |dMOTA| " + fmt("%.1e", worst_mota) + "), engineered FP/FN on " + std::to_string(engineered_ok) +
              ", OKS equal on " + std::to_string(oks_ok) + "/" + std::to_string(pairs)};
}

// ------------------------------------------------------------------ 12

Outcome performance() {
  const auto fs = cli::synthetic_bench_fieldset(0, 5, 20);
  const auto report = cli::bench_decode(fs.cifs, fs.cafs, fs.skeleton, DecoderConfig{}, 5);
  const double median = report.total.median_ms;
  std::string detail = "median " + fmt("%.2f", median) + " ms, p95 " + fmt("%.2f", report.total.p95_ms) + " ms";
  bool ok = median < 50.0;
  std::ifstream in(PIFDECODE_BASELINE_FILE);
  if (in) {
    const auto baseline = nlohmann::json::parse(in, nullptr, false);
    if (!baseline.is_discarded() && baseline.contains("total_median_ms")) {
      const double base = baseline["total_median_ms"].get<double>();
      ok = ok && median <= 1.25 * base;
      detail += ", baseline " + fmt("%.2f", base) + " ms";
    } else {
      detail += ", unreadable baseline";
    }
  } else {
    detail += ", no baseline file";
  }
  return {ok, detail};
}

// ------------------------------------------------------------------ 13

Outcome self_hidden() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<> pos(0, 60), size(1, 12), u(0, 1);
  int violations = 0;
  const int trials = 2000;
  for (int trial = 0; trial < trials; ++trial) {
    const int people = 1 + static_cast<int>(rng() % 6);
    const int keypoints = 1 + static_cast<int>(rng() % 4);
    std::vector<GroundTruthAnnotation> in;
    for (int p = 0; p < people; ++p) {
      GroundTruthAnnotation a;
      a.id = p + 1;
      for (int k = 0; k < keypoints; ++k) {
        const double r = u(rng);
        const Visibility v = r < 0.2 ? Visibility::absent : (r < 0.6 ? Visibility::hidden : Visibility::visible);
        a.keypoints.push_back({pos(rng), pos(rng), v, size(rng)});
      }
      in.push_back(a);
    }
    const double factor = std::uniform_real_distribution<>(0.2, 2.0)(rng);
    const auto out = suppress_self_hidden(in, factor);
    bool ok = suppress_self_hidden(out, factor) == out;
    for (std::size_t p = 0; p < in.size(); ++p) {
      for (std::size_t k = 0; k < in[p].keypoints.size(); ++k) {
        const auto& before = in[p].keypoints[k];
        const auto& after = out[p].keypoints[k];
        if (before.visibility != Visibility::hidden) {
          ok = ok && after.visibility == before.visibility;
          continue;
        }
        bool near_visible = false;
        for (const auto& other : in) {
          const auto& v = other.keypoints[k];
          near_visible |= v.visibility == Visibility::visible && std::hypot(v.x - before.x, v.y - before.y) < factor * v.size;
        }
        ok = ok && after.visibility == (near_visible ? Visibility::absent : Visibility::hidden);
      }
    }
    violations += !ok;
  }
  return {violations == 0, std::to_string(trials - violations) + "/" + std::to_string(trials) +
                               " random sets idempotent, visible kept, suppression exact"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool warning_only = false;
  };
  const std::vector<Criterion> criteria = {
      {1, "encode/decode round trip on 100 scenes", round_trip},
      {2, "dense edges bridge a missing association", dense_bridging},
      {3, "loss gradients match central differences", gradients},
      {4, "pinned loss constants", loss_constants},
      {5, "frontier growth is best-first", frontier},
      {6, "rescoring ablation under noise", rescoring},
      {7, "identities on 50 steady sequences", steady_sequences},
      {8, "crossing sequences favour temporal links", crossing_sequences},
      {9, "limb recovered through temporal links", temporal_occlusion},
      {10, "hungarian assignment is optimal", hungarian},
      {11, "MOTA and OKS match the references", metric_oracles},
      {12, "decode latency", performance, true},
      {13, "self-hidden suppression properties", self_hidden},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* status = o.pass ? "PASS" : (c.warning_only ? "WARN" : "FAIL");
    if (!o.pass && !c.warning_only) ++failures;
    std::printf("%s  #%-2d %s  (%s, %.1f s)\n", status, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
