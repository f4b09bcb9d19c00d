// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "growth.hpp"
#include "pifdecode/error.hpp"
#include "pifdecode/hungarian.hpp"
#include "pifdecode/metrics.hpp"

namespace pifdecode {

std::string_view to_string(TrackingBaseline baseline) {
  switch (baseline) {
    case TrackingBaseline::tcaf: return "tcaf";
    case TrackingBaseline::hungarian_euclidean: return "hungarian-euclidean";
    case TrackingBaseline::hungarian_oks: return "hungarian-oks";
  }
  return "tcaf";
}

TrackingBaseline parse_tracking_baseline(std::string_view text) {
  if (text == "tcaf") return TrackingBaseline::tcaf;
  if (text == "hungarian-euclidean" || text == "hungarian_euclidean") return TrackingBaseline::hungarian_euclidean;
  if (text == "hungarian-oks" || text == "hungarian_oks") return TrackingBaseline::hungarian_oks;
  throw DomainError("unknown tracking baseline: " + std::string(text));
}

double default_match_threshold(TrackingBaseline baseline) {
  return baseline == TrackingBaseline::hungarian_oks ? 0.3 : 50.0;
}

std::vector<TrackedPose> soft_nms(std::vector<TrackedPose> poses, const NmsConfig& nms, const SoftNmsConfig& soft,
                                  int max_poses) {
  std::stable_sort(poses.begin(), poses.end(),
                   [](const TrackedPose& a, const TrackedPose& b) { return a.pose.score > b.pose.score; });
  Occupancy occupancy;
  std::vector<TrackedPose> kept;
  for (TrackedPose& tp : poses) {
    auto& kps = tp.pose.keypoints;
    for (int k = 0; k < static_cast<int>(kps.size()); ++k) {
      Keypoint& kp = kps[static_cast<std::size_t>(k)];
      if (!kp.detected() || !occupancy.occupied(k, kp.x, kp.y)) continue;
      kp.score *= soft.decay;
      if (!kp.detected()) kp = Keypoint{};
    }
    tp.pose.score = instance_score(tp.pose);
    if (tp.pose.num_detected() < nms.min_keypoints || tp.pose.score < nms.instance_threshold) continue;
    for (int k = 0; k < static_cast<int>(kps.size()); ++k) {
      const Keypoint& kp = kps[static_cast<std::size_t>(k)];
      if (kp.detected()) occupancy.claim(k, kp.x, kp.y, nms_radius(kp, nms));
    }
    kept.push_back(std::move(tp));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const TrackedPose& a, const TrackedPose& b) { return a.pose.score > b.pose.score; });
  if (static_cast<int>(kept.size()) > max_poses) kept.resize(static_cast<std::size_t>(max_poses));
  return kept;
}

namespace {

void check_frame_tensors(const FieldTensor& cif, const FieldTensor& caf, const FieldTensor* tcaf,
                         const Skeleton& skeleton) {
  if (cif.frame() != caf.frame()) throw SequenceError("CIF and CAF belong to different frames");
  if (tcaf == nullptr) return;
  if (tcaf->kind() != FieldKind::tcaf) throw ShapeError("expected a TCAF tensor");
  if (tcaf->fields() != skeleton.num_temporal_edges()) {
    throw ShapeError("TCAF has " + std::to_string(tcaf->fields()) + " fields but skeleton " + skeleton.name +
                     " has " + std::to_string(skeleton.num_temporal_edges()) + " temporal edges");
  }
  if (tcaf->height() != cif.height() || tcaf->width() != cif.width() || tcaf->stride() != cif.stride()) {
    throw ShapeError("TCAF grid differs from the CIF grid");
  }
  if (tcaf->frame() != cif.frame()) {
    throw SequenceError("TCAF ends at frame " + std::to_string(tcaf->frame()) + " but the fields are of frame " +
                        std::to_string(cif.frame()));
  }
}

}  // namespace

std::vector<TrackedPose> track_step(TrackerState& state, const FieldTensor& cif, const FieldTensor& caf,
                                    const FieldTensor* tcaf, const Skeleton& skeleton, const TrackingConfig& config) {
  const DecoderConfig& dc = config.decoder;
  validate_decoder_config(dc);
  if (config.track_timeout < 0) throw DomainError("track_timeout must be >= 0");
  if (cif.kind() != FieldKind::cif || caf.kind() != FieldKind::caf) throw ShapeError("expected CIF and CAF tensors");
  if (cif.fields() != skeleton.num_keypoints() || caf.fields() != skeleton.num_edges()) {
    throw ShapeError("fields do not match skeleton " + skeleton.name);
  }
  check_frame_tensors(cif, caf, tcaf, skeleton);
  const std::int64_t frame = cif.frame();
  if (state.previous_frame && frame != *state.previous_frame + 1) {
    throw SequenceError("expected frame " + std::to_string(*state.previous_frame + 1) + ", got " +
                        std::to_string(frame));
  }

  const int K = skeleton.num_keypoints();
  const bool need_hr = dc.caf_rescoring || dc.seed_rescoring == SeedRescoring::hr;
  auto hr_map = std::make_shared<HrMap>();
  if (need_hr) *hr_map = cif_hr_accumulate(cif, dc.hr_threshold);
  const HrMap* hr = need_hr ? hr_map.get() : nullptr;
  const HrMap* rescore_hr = dc.caf_rescoring ? hr : nullptr;
  const HrMap* rescore_prev = dc.caf_rescoring ? state.previous_hr.get() : nullptr;

  const AssociationIndex caf_index(caf, dc.caf_threshold);
  std::optional<AssociationIndex> tcaf_index;
  const bool temporal = tcaf != nullptr && state.previous_frame.has_value();
  if (temporal) tcaf_index.emplace(*tcaf, dc.caf_threshold);

  // Nodes [0, K) are frame t-1, nodes [K, 2K) frame t0.
  detail::GrowthGraph graph(2 * K);
  detail::add_spatial_links(graph, skeleton, caf_index, rescore_hr, dc.use_dense_edges, K);
  if (temporal) {
    for (int j = 0; j < skeleton.num_temporal_edges(); ++j) {
      const int k = skeleton.temporal_edges[static_cast<std::size_t>(j)];
      graph.add({k, K + k, {&*tcaf_index, j, true, rescore_hr, k, rescore_prev, k}});
    }
  }

  struct Candidate {
    std::int64_t origin;  // 0 for a fresh pose
    Pose pose;
  };
  std::vector<Candidate> candidates;
  Occupancy occupancy;
  auto claim = [&](const Pose& pose) {
    for (int k = 0; k < K; ++k) {
      const Keypoint& kp = pose.keypoints[static_cast<std::size_t>(k)];
      if (kp.detected()) occupancy.claim(k, kp.x, kp.y, nms_radius(kp, dc.nms));
    }
  };

  if (temporal) {
    std::vector<const Track*> order;
    for (const Track& t : state.tracks) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(), [](const Track* a, const Track* b) {
      if (a->last_pose().score != b->last_pose().score) return a->last_pose().score > b->last_pose().score;
      return a->id < b->id;
    });
    for (const Track* track : order) {
      std::vector<Keypoint> nodes(static_cast<std::size_t>(2 * K));
      const Pose& last = track->last_pose();
      std::copy(last.keypoints.begin(), last.keypoints.end(), nodes.begin());
      detail::grow(nodes, graph, dc);
      Pose pose{std::vector<Keypoint>(nodes.begin() + K, nodes.end()), 0.0};
      if (pose.num_detected() == 0) continue;
      pose.score = instance_score(pose);
      claim(pose);
      candidates.push_back({track->id, std::move(pose)});
    }
  }

  for (const Seed& seed : extract_seeds(cif, hr, dc)) {
    if (occupancy.occupied(seed.keypoint, seed.x, seed.y)) continue;
    std::vector<Keypoint> nodes(static_cast<std::size_t>(2 * K));
    nodes[static_cast<std::size_t>(K + seed.keypoint)] = {seed.x, seed.y, seed.score, seed.size};
    detail::grow(nodes, graph, dc);
    Pose pose{std::vector<Keypoint>(nodes.begin() + K, nodes.end()), 0.0};
    pose.score = instance_score(pose);
    claim(pose);
    candidates.push_back({0, std::move(pose)});
  }

  std::vector<TrackedPose> tracked;
  for (auto& c : candidates) tracked.push_back({c.origin, std::move(c.pose)});
  tracked = soft_nms(std::move(tracked), dc.nms, config.soft_nms, dc.max_poses);

  for (TrackedPose& tp : tracked) {
    if (tp.track_id == 0) {
      tp.track_id = state.next_track_id++;
      Track t;
      t.id = tp.track_id;
      state.tracks.push_back(std::move(t));
    }
    for (Track& t : state.tracks) {
      if (t.id != tp.track_id) continue;
      t.poses.clear();
      t.poses[frame] = tp.pose;
      t.last_active_frame = frame;
    }
  }
  std::erase_if(state.tracks, [&](const Track& t) { return frame - t.last_active_frame > config.track_timeout; });
  state.previous_frame = frame;
  state.previous_hr = need_hr ? std::shared_ptr<const HrMap>(hr_map) : nullptr;
  return tracked;
}

double pose_distance_euclidean(const Pose& a, const Pose& b) {
  if (a.keypoints.size() != b.keypoints.size()) throw ShapeError("poses have different keypoint counts");
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
    const auto& p = a.keypoints[i];
    const auto& q = b.keypoints[i];
    if (!p.detected() || !q.detected()) continue;
    sum += std::hypot(p.x - q.x, p.y - q.y);
    ++n;
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::infinity();
}

double pose_distance_oks(const Pose& a, const Pose& b, const Skeleton& skeleton, double area) {
  if (a.keypoints.size() != b.keypoints.size()) throw ShapeError("poses have different keypoint counts");
  GroundTruthAnnotation gt;
  for (const auto& kp : b.keypoints) {
    gt.keypoints.push_back({kp.x, kp.y, kp.detected() ? Visibility::visible : Visibility::absent, kp.size});
  }
  return oks(a, gt, skeleton, area > 0.0 ? area : gt.area());
}

std::vector<TrackedPose> hungarian_track(const std::vector<TrackedPose>& previous, const std::vector<Pose>& current,
                                         PoseDistance distance, double threshold, const Skeleton& skeleton,
                                         std::int64_t& next_track_id) {
  const int rows = static_cast<int>(previous.size());
  const int cols = static_cast<int>(current.size());
  std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
  std::vector<bool> valid(cost.size());
  // Invalid pairs get a cost above any total of valid ones, so the solver
  // maximizes the number of valid matches first.
  const double valid_max = distance == PoseDistance::euclidean ? threshold : 1.0;
  const double big = (valid_max + 1.0) * (std::min(rows, cols) + 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      const Pose& prev = previous[static_cast<std::size_t>(r)].pose;
      const Pose& cur = current[static_cast<std::size_t>(c)];
      double value;
      bool ok;
      if (distance == PoseDistance::euclidean) {
        value = pose_distance_euclidean(prev, cur);
        ok = value <= threshold;
      } else {
        const bool any = prev.num_detected() > 0;
        const double sim = any ? pose_distance_oks(cur, prev, skeleton) : 0.0;
        value = 1.0 - sim;
        ok = sim >= threshold;
      }
      valid[i] = ok;
      cost[i] = ok ? value : big;
    }
  }
  const auto assignment = hungarian_assign(cost, rows, cols);
  std::vector<std::int64_t> ids(static_cast<std::size_t>(cols), 0);
  for (int r = 0; r < rows; ++r) {
    const int c = assignment[static_cast<std::size_t>(r)];
    if (c >= 0 && valid[static_cast<std::size_t>(r) * cols + c]) {
      ids[static_cast<std::size_t>(c)] = previous[static_cast<std::size_t>(r)].track_id;
    }
  }
  std::vector<TrackedPose> out;
  for (int c = 0; c < cols; ++c) {
    std::int64_t id = ids[static_cast<std::size_t>(c)];
    if (id == 0) id = next_track_id++;
    out.push_back({id, current[static_cast<std::size_t>(c)]});
  }
  return out;
}

PoseTracker::PoseTracker(Skeleton skeleton, TrackingConfig config)
    : skeleton_(std::move(skeleton)), config_(std::move(config)) {
  if (config_.match_threshold <= 0.0) config_.match_threshold = default_match_threshold(config_.baseline);
}

std::vector<TrackedPose> PoseTracker::step(const FieldTensor& cif, const FieldTensor& caf, const FieldTensor* tcaf) {
  std::vector<TrackedPose> out;
  if (config_.baseline == TrackingBaseline::tcaf) {
    out = track_step(state_, cif, caf, tcaf, skeleton_, config_);
  } else {
    const std::int64_t frame = cif.frame();
    if (state_.previous_frame && frame != *state_.previous_frame + 1) {
      throw SequenceError("expected frame " + std::to_string(*state_.previous_frame + 1) + ", got " +
                          std::to_string(frame));
    }
    const auto poses = decode_frame(cif, caf, skeleton_, config_.decoder);
    std::vector<TrackedPose> previous;
    for (const Track& t : state_.tracks) previous.push_back({t.id, t.last_pose()});
    const auto mode = config_.baseline == TrackingBaseline::hungarian_oks ? PoseDistance::oks : PoseDistance::euclidean;
    out = hungarian_track(previous, poses, mode, config_.match_threshold, skeleton_, state_.next_track_id);
    for (const TrackedPose& tp : out) {
      auto it = std::find_if(state_.tracks.begin(), state_.tracks.end(),
                             [&](const Track& t) { return t.id == tp.track_id; });
      if (it == state_.tracks.end()) {
        state_.tracks.push_back(Track{tp.track_id, {}, frame});
        it = std::prev(state_.tracks.end());
      }
      it->poses.clear();
      it->poses[frame] = tp.pose;
      it->last_active_frame = frame;
    }
    std::erase_if(state_.tracks,
                  [&](const Track& t) { return frame - t.last_active_frame > config_.track_timeout; });
    state_.previous_frame = frame;
  }
  for (const TrackedPose& tp : out) {
    Track& t = history_[tp.track_id];
    t.id = tp.track_id;
    t.poses[cif.frame()] = tp.pose;
    t.last_active_frame = cif.frame();
  }
  return out;
}

}  // namespace pifdecode
