// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/decoder.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <queue>
#include <tuple>

#include "growth.hpp"
#include "pifdecode/error.hpp"

namespace pifdecode {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(SeedRescoring mode) {
  switch (mode) {
    case SeedRescoring::hr: return "hr";
    case SeedRescoring::local_3x3_nms: return "local_3x3_nms";
    case SeedRescoring::none: return "none";
  }
  return "hr";
}

SeedRescoring parse_seed_rescoring(std::string_view text) {
  if (text == "hr") return SeedRescoring::hr;
  if (text == "local_3x3_nms") return SeedRescoring::local_3x3_nms;
  if (text == "none") return SeedRescoring::none;
  throw DomainError("unknown seed rescoring mode: " + std::string(text));
}

void validate_decoder_config(const DecoderConfig& config) {
  check_unit(config.seed_threshold, "seed_threshold");
  check_unit(config.keypoint_threshold, "keypoint_threshold");
  check_unit(config.caf_threshold, "caf_threshold");
  check_unit(config.hr_threshold, "hr_threshold");
  check_unit(config.nms.instance_threshold, "instance_threshold");
  if (!(config.hr_saturation > 0.0)) throw DomainError("hr_saturation must be positive");
  if (config.max_poses < 1) throw DomainError("max_poses must be positive");
  if (config.nms.r_min < 0.0 || config.nms.alpha < 0.0) throw DomainError("NMS radius parameters must be >= 0");
  if (config.nms.min_keypoints < 1) throw DomainError("min_keypoints must be positive");
}

double hr_confidence(const HrMap& hr, int keypoint, double x, double y, double saturation) {
  return std::min(1.0, hr.value_at(keypoint, x, y) / saturation);
}

std::vector<Seed> extract_seeds(const FieldTensor& cif, const HrMap* hr, const DecoderConfig& config) {
  if (cif.kind() != FieldKind::cif) throw ShapeError("extract_seeds expects a CIF tensor");
  const bool rescore = config.seed_rescoring == SeedRescoring::hr && hr != nullptr;
  const bool local_nms = config.seed_rescoring == SeedRescoring::local_3x3_nms;
  const int w = cif.width();
  const int h = cif.height();

  struct Candidate {
    Seed seed;
    int cell;
  };
  std::vector<Candidate> candidates;
  for (int k = 0; k < cif.fields(); ++k) {
    const auto conf = cif.plane(cif_channel::c, k);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        const double c = conf[i];
        if (!(c >= config.seed_threshold) || c <= 0.0) continue;
        if (local_nms) {
          bool dominated = false;
          for (int ny = std::max(0, y - 1); ny <= std::min(h - 1, y + 1) && !dominated; ++ny) {
            for (int nx = std::max(0, x - 1); nx <= std::min(w - 1, x + 1); ++nx) {
              const int j = ny * w + nx;
              if (conf[j] > c || (conf[j] == c && j < i)) {
                dominated = true;
                break;
              }
            }
          }
          if (dominated) continue;
        }
        Seed s;
        s.keypoint = k;
        s.x = cif.at(cif_channel::x, k, y, x);
        s.y = cif.at(cif_channel::y, k, y, x);
        s.size = cif.at(cif_channel::sigma, k, y, x);
        if (!(s.size > 0.0)) s.size = cif.stride();
        s.score = std::min(1.0, c);
        if (rescore) s.score *= hr_confidence(*hr, k, s.x, s.y, config.hr_saturation);
        if (s.score < config.seed_threshold || s.score <= 0.0) continue;
        candidates.push_back({s, i});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.seed.score != b.seed.score) return a.seed.score > b.seed.score;
    if (a.seed.keypoint != b.seed.keypoint) return a.seed.keypoint < b.seed.keypoint;
    return a.cell < b.cell;
  });
  std::vector<Seed> seeds;
  seeds.reserve(candidates.size());
  for (const auto& c : candidates) seeds.push_back(c.seed);
  return seeds;
}

double caf_association_score(const Association& assoc, double source_x, double source_y, const HrMap* hr_target,
                             int target_keypoint, bool caf_rescoring, double hr_saturation) {
  if (!(assoc.sigma1 > 0.0)) return 0.0;
  const double d = std::hypot(source_x - assoc.x1, source_y - assoc.y1);
  double score = assoc.c * std::exp(-d / assoc.sigma1);
  if (caf_rescoring && hr_target != nullptr) {
    score *= hr_confidence(*hr_target, target_keypoint, assoc.x2, assoc.y2, hr_saturation);
  }
  return score;
}

AssociationIndex::AssociationIndex(const FieldTensor& caf, double threshold) : stride_(caf.stride()) {
  if (caf.kind() != FieldKind::caf && caf.kind() != FieldKind::tcaf) {
    throw ShapeError("AssociationIndex expects a CAF or TCAF tensor");
  }
  bucket_ = 2.0 * caf.stride();
  grid_w_ = static_cast<int>(std::floor((caf.image_size().width - 1) / bucket_)) + 1;
  grid_h_ = static_cast<int>(std::floor((caf.image_size().height - 1) / bucket_)) + 1;
  const std::size_t buckets = static_cast<std::size_t>(grid_w_) * grid_h_;
  auto bucket_of = [&](double x, double y) {
    const int bx = std::clamp(static_cast<int>(std::floor(x / bucket_)), 0, grid_w_ - 1);
    const int by = std::clamp(static_cast<int>(std::floor(y / bucket_)), 0, grid_h_ - 1);
    return static_cast<std::size_t>(by) * grid_w_ + bx;
  };

  fields_.resize(static_cast<std::size_t>(caf.fields()));
  for (int f = 0; f < caf.fields(); ++f) {
    Field& field = fields_[static_cast<std::size_t>(f)];
    const auto conf = caf.plane(caf_channel::c, f);
    const auto x1 = caf.plane(caf_channel::x1, f);
    const auto y1 = caf.plane(caf_channel::y1, f);
    const auto x2 = caf.plane(caf_channel::x2, f);
    const auto y2 = caf.plane(caf_channel::y2, f);
    const auto s1 = caf.plane(caf_channel::sigma1, f);
    const auto s2 = caf.plane(caf_channel::sigma2, f);
    for (std::size_t i = 0; i < conf.size(); ++i) {
      if (!(conf[i] > threshold)) continue;
      const double c = std::min(1.0, static_cast<double>(conf[i]));
      field.cells.push_back({c, x1[i], y1[i], x2[i], y2[i], s1[i], s2[i]});
      field.c_max = std::max(field.c_max, c);
    }
    for (int s = 0; s < 2; ++s) {
      Side& side = field.sides[static_cast<std::size_t>(s)];
      std::vector<std::size_t> bucket(field.cells.size());
      side.offsets.assign(buckets + 1, 0);
      for (std::size_t i = 0; i < field.cells.size(); ++i) {
        const Association& a = field.cells[i];
        bucket[i] = s == 0 ? bucket_of(a.x1, a.y1) : bucket_of(a.x2, a.y2);
        ++side.offsets[bucket[i] + 1];
        side.sigma_max = std::max(side.sigma_max, s == 0 ? a.sigma1 : a.sigma2);
      }
      for (std::size_t b = 0; b < buckets; ++b) side.offsets[b + 1] += side.offsets[b];
      side.order.resize(field.cells.size());
      std::vector<std::uint32_t> fill(side.offsets.begin(), side.offsets.end() - 1);
      for (std::size_t i = 0; i < field.cells.size(); ++i) side.order[fill[bucket[i]]++] = static_cast<std::uint32_t>(i);
    }
  }
}

namespace {

struct Scored {
  double score = 0.0;
  Association assoc;
};

/// Deterministic tie-break between equally scored cells, independent of the
/// order in which the search visits them.
bool earlier(const Association& a, const Association& b) {
  return std::tie(a.x2, a.y2, a.x1, a.y1, a.c, a.sigma1, a.sigma2) <
         std::tie(b.x2, b.y2, b.x1, b.y1, b.c, b.sigma1, b.sigma2);
}

/// Best two associations found nearest-first. Exact: the search stops only
/// when no remaining cell can beat the current bar. When the best score
/// cannot reach `floor` the search also stops; callers reject such results.
void best_two(const AssociationIndex& index, int f, bool forward, double sx, double sy, const HrMap* hr,
              int keypoint, const DecoderConfig& config, bool want_second, double floor, Scored& first,
              Scored& second) {
  auto bound = [&](double limit) {
    if (first.score < floor && limit < floor) return false;
    return limit >= (want_second ? second.score : first.score);
  };
  auto visit = [&](const Association& cell) {
    const Association a = forward ? cell : cell.reversed();
    if (!(a.sigma1 > 0.0)) return;
    const double bar = want_second ? second.score : first.score;
    const double partial = a.c * std::exp(-std::hypot(sx - a.x1, sy - a.y1) / a.sigma1);
    // The HR factor is at most 1, so the partial score bounds the final one.
    if (partial < bar || partial <= 0.0) return;
    double score = partial;
    if (config.caf_rescoring && hr != nullptr) {
      score *= hr_confidence(*hr, keypoint, a.x2, a.y2, config.hr_saturation);
    }
    if (score > first.score || (score == first.score && score > 0.0 && earlier(a, first.assoc))) {
      if (want_second) second = first;
      first = {score, a};
    } else if (want_second && (score > second.score ||
                               (score == second.score && score > 0.0 && earlier(a, second.assoc)))) {
      second = {score, a};
    }
  };
  index.search(f, forward, sx, sy, bound, visit);
}

}  // namespace

std::optional<Connection> find_connection(const Keypoint& source, const EdgeQuery& query,
                                          const DecoderConfig& config) {
  if (query.index == nullptr || !source.detected()) return std::nullopt;
  Scored first, second;
  best_two(*query.index, query.field, query.forward, source.x, source.y, query.target_hr, query.target_keypoint,
           config, config.blend_top2, config.keypoint_threshold, first, second);
  if (!(first.score > 0.0) || first.score < config.keypoint_threshold) return std::nullopt;

  Connection out{first.assoc.x2, first.assoc.y2, first.assoc.sigma2, first.score};
  if (config.blend_top2 && second.score > 0.0 &&
      std::hypot(second.assoc.x2 - first.assoc.x2, second.assoc.y2 - first.assoc.y2) < first.assoc.sigma2) {
    const double s1 = first.score;
    const double s2 = second.score;
    const double total = s1 + s2;
    out.x = (s1 * first.assoc.x2 + s2 * second.assoc.x2) / total;
    out.y = (s1 * first.assoc.y2 + s2 * second.assoc.y2) / total;
    out.size = (s1 * first.assoc.sigma2 + s2 * second.assoc.sigma2) / total;
    out.score = (s1 * s1 + s2 * s2) / total;
  }
  if (!(out.size > 0.0)) out.size = query.index->stride();
  out.score = std::min(1.0, out.score);

  if (config.reverse_match) {
    Scored back, unused;
    best_two(*query.index, query.field, !query.forward, out.x, out.y, query.source_hr, query.source_keypoint, config,
             false, 0.0, back, unused);
    if (!(back.score > 0.0)) return std::nullopt;
    const double tolerance = std::max(first.assoc.sigma1, 2.0 * query.index->stride());
    if (std::hypot(back.assoc.x2 - source.x, back.assoc.y2 - source.y) > tolerance) return std::nullopt;
  }
  return out;
}

std::optional<Connection> find_connection(const Pose& partial, const Skeleton& skeleton, int edge, bool forward,
                                          const AssociationIndex& caf, const HrMap* hr, const DecoderConfig& config) {
  const Edge& e = skeleton.edges.at(static_cast<std::size_t>(edge));
  const int source = forward ? e.source : e.target;
  const int target = forward ? e.target : e.source;
  EdgeQuery q{&caf, edge, forward, hr, target, hr, source};
  return find_connection(partial.keypoints.at(static_cast<std::size_t>(source)), q, config);
}

std::uint64_t Occupancy::key(int keypoint, std::int64_t cx, std::int64_t cy) const {
  // 16 bits of keypoint type, 24 bits per signed cell coordinate.
  const auto ux = static_cast<std::uint64_t>(cx + (1 << 23)) & 0xFFFFFF;
  const auto uy = static_cast<std::uint64_t>(cy + (1 << 23)) & 0xFFFFFF;
  return (static_cast<std::uint64_t>(keypoint) << 48) | (uy << 24) | ux;
}

void Occupancy::claim(int keypoint, double x, double y, double radius) {
  const auto cx0 = static_cast<std::int64_t>(std::floor((x - radius) / cell_));
  const auto cx1 = static_cast<std::int64_t>(std::floor((x + radius) / cell_));
  const auto cy0 = static_cast<std::int64_t>(std::floor((y - radius) / cell_));
  const auto cy1 = static_cast<std::int64_t>(std::floor((y + radius) / cell_));
  for (auto cy = cy0; cy <= cy1; ++cy) {
    for (auto cx = cx0; cx <= cx1; ++cx) buckets_[key(keypoint, cx, cy)].push_back({x, y, radius * radius});
  }
}

bool Occupancy::occupied(int keypoint, double x, double y) const {
  const auto cx = static_cast<std::int64_t>(std::floor(x / cell_));
  const auto cy = static_cast<std::int64_t>(std::floor(y / cell_));
  auto it = buckets_.find(key(keypoint, cx, cy));
  if (it == buckets_.end()) return false;
  for (const Disc& d : it->second) {
    const double dx = x - d.x;
    const double dy = y - d.y;
    if (dx * dx + dy * dy <= d.r2) return true;
  }
  return false;
}

namespace detail {

void add_spatial_links(GrowthGraph& graph, const Skeleton& skeleton, const AssociationIndex& caf, const HrMap* hr,
                       bool dense, int offset) {
  for (int e = 0; e < skeleton.num_edges(); ++e) {
    const Edge& edge = skeleton.edges[static_cast<std::size_t>(e)];
    if (edge.dense && !dense) continue;
    graph.add({offset + edge.source, offset + edge.target, {&caf, e, true, hr, edge.target, hr, edge.source}});
    graph.add({offset + edge.target, offset + edge.source, {&caf, e, false, hr, edge.source, hr, edge.target}});
  }
}

namespace {

struct FrontierEntry {
  double score;
  int target;
  int source;
  std::uint64_t order;
  Connection connection;
};

/// Max-heap order: higher score first, then lower target, source and insertion order.
struct FrontierLess {
  bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
    if (a.score != b.score) return a.score < b.score;
    if (a.target != b.target) return a.target > b.target;
    if (a.source != b.source) return a.source > b.source;
    return a.order > b.order;
  }
};

Keypoint to_keypoint(const Connection& c) { return {c.x, c.y, c.score, c.size}; }

}  // namespace

void grow(std::vector<Keypoint>& nodes, const GrowthGraph& graph, const DecoderConfig& config) {
  auto accept = [&](const std::optional<Connection>& c) {
    return c.has_value() && c->score > 0.0 && c->score >= config.keypoint_threshold;
  };

  if (config.use_frontier) {
    std::priority_queue<FrontierEntry, std::vector<FrontierEntry>, FrontierLess> frontier;
    std::uint64_t order = 0;
    auto expand = [&](int node) {
      for (int li : graph.outgoing[static_cast<std::size_t>(node)]) {
        const GrowthLink& link = graph.links[static_cast<std::size_t>(li)];
        if (nodes[static_cast<std::size_t>(link.target)].detected()) continue;
        auto c = find_connection(nodes[static_cast<std::size_t>(node)], link.query, config);
        if (!accept(c)) continue;
        frontier.push({c->score, link.target, link.source, order++, *c});
      }
    };
    for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
      if (nodes[static_cast<std::size_t>(n)].detected()) expand(n);
    }
    while (!frontier.empty()) {
      const FrontierEntry entry = frontier.top();
      frontier.pop();
      Keypoint& target = nodes[static_cast<std::size_t>(entry.target)];
      if (target.detected()) continue;  // claimed by a better entry; stale
      target = to_keypoint(entry.connection);
      expand(entry.target);
    }
    return;
  }

  std::vector<bool> processed(nodes.size(), false);
  for (;;) {
    int best = -1;
    for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
      const auto& kp = nodes[static_cast<std::size_t>(n)];
      if (!kp.detected() || processed[static_cast<std::size_t>(n)]) continue;
      if (best < 0 || kp.score > nodes[static_cast<std::size_t>(best)].score) best = n;
    }
    if (best < 0) return;
    processed[static_cast<std::size_t>(best)] = true;
    for (int li : graph.outgoing[static_cast<std::size_t>(best)]) {
      const GrowthLink& link = graph.links[static_cast<std::size_t>(li)];
      Keypoint& target = nodes[static_cast<std::size_t>(link.target)];
      if (target.detected()) continue;
      auto c = find_connection(nodes[static_cast<std::size_t>(best)], link.query, config);
      if (accept(c)) target = to_keypoint(*c);
    }
  }
}

}  // namespace detail

Pose grow_pose(Pose pose, const Skeleton& skeleton, const AssociationIndex& caf, const HrMap* hr,
               const DecoderConfig& config) {
  if (static_cast<int>(pose.keypoints.size()) != skeleton.num_keypoints()) {
    throw ShapeError("pose keypoint count does not match the skeleton");
  }
  detail::GrowthGraph graph(skeleton.num_keypoints());
  detail::add_spatial_links(graph, skeleton, caf, hr, config.use_dense_edges, 0);
  detail::grow(pose.keypoints, graph, config);
  pose.score = instance_score(pose);
  return pose;
}

double instance_score(std::span<const double> scores) {
  if (scores.empty()) return 0.0;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double top = 0.0;
  double rest = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) (i < 3 ? top : rest) += sorted[i];
  const double n = static_cast<double>(sorted.size());
  const double top_n = std::min(3.0, n);
  return (3.0 * top + rest) / (3.0 * top_n + (n - top_n));
}

double instance_score(const Pose& pose) {
  std::vector<double> scores;
  for (const auto& kp : pose.keypoints) {
    if (kp.detected()) scores.push_back(kp.score);
  }
  return instance_score(scores);
}

std::vector<Pose> keypoint_nms(std::vector<Pose> poses, const NmsConfig& nms, int max_poses) {
  std::stable_sort(poses.begin(), poses.end(), [](const Pose& a, const Pose& b) { return a.score > b.score; });
  Occupancy occupancy;
  std::vector<Pose> kept;
  for (Pose& pose : poses) {
    for (int k = 0; k < static_cast<int>(pose.keypoints.size()); ++k) {
      Keypoint& kp = pose.keypoints[static_cast<std::size_t>(k)];
      if (kp.detected() && occupancy.occupied(k, kp.x, kp.y)) kp = Keypoint{};
    }
    pose.score = instance_score(pose);
    if (pose.num_detected() < nms.min_keypoints || pose.score < nms.instance_threshold) continue;
    for (int k = 0; k < static_cast<int>(pose.keypoints.size()); ++k) {
      const Keypoint& kp = pose.keypoints[static_cast<std::size_t>(k)];
      if (kp.detected()) occupancy.claim(k, kp.x, kp.y, nms_radius(kp, nms));
    }
    kept.push_back(std::move(pose));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Pose& a, const Pose& b) { return a.score > b.score; });
  if (static_cast<int>(kept.size()) > max_poses) kept.resize(static_cast<std::size_t>(max_poses));
  return kept;
}

namespace {

void check_fieldset(const FieldTensor& cif, const FieldTensor& caf, const Skeleton& skeleton) {
  if (cif.kind() != FieldKind::cif) throw ShapeError("expected a CIF tensor");
  if (caf.kind() != FieldKind::caf) throw ShapeError("expected a CAF tensor");
  if (cif.fields() != skeleton.num_keypoints()) {
    throw ShapeError("CIF has " + std::to_string(cif.fields()) + " fields but skeleton " + skeleton.name + " has " +
                     std::to_string(skeleton.num_keypoints()) + " keypoints");
  }
  if (caf.fields() != skeleton.num_edges()) {
    throw ShapeError("CAF has " + std::to_string(caf.fields()) + " fields but skeleton " + skeleton.name + " has " +
                     std::to_string(skeleton.num_edges()) + " edges");
  }
  if (cif.height() != caf.height() || cif.width() != caf.width() || cif.stride() != caf.stride() ||
      cif.image_size() != caf.image_size()) {
    throw ShapeError("CIF and CAF grids differ");
  }
}

/// Fills undetected keypoints from sub-threshold evidence, then from the
/// nearest detected neighbor in the skeleton graph.
void complete_pose(std::vector<Keypoint>& nodes, const Skeleton& skeleton, const detail::GrowthGraph& relaxed_graph,
                   const DecoderConfig& config) {
  constexpr double kFloor = 0.001;
  std::vector<bool> before(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) before[i] = nodes[i].detected();
  DecoderConfig relaxed = config;
  relaxed.keypoint_threshold = 0.0;
  relaxed.reverse_match = false;
  detail::grow(nodes, relaxed_graph, relaxed);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!before[i] && nodes[i].detected()) nodes[i].score = std::max(nodes[i].score, kFloor);
  }

  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& e : skeleton.edges) {
    adj[static_cast<std::size_t>(e.source)].push_back(e.target);
    adj[static_cast<std::size_t>(e.target)].push_back(e.source);
  }
  std::deque<int> queue;
  for (int n = 0; n < static_cast<int>(nodes.size()); ++n) {
    if (nodes[static_cast<std::size_t>(n)].detected()) queue.push_back(n);
  }
  while (!queue.empty()) {
    const int n = queue.front();
    queue.pop_front();
    for (int m : adj[static_cast<std::size_t>(n)]) {
      Keypoint& kp = nodes[static_cast<std::size_t>(m)];
      if (kp.detected()) continue;
      const Keypoint& from = nodes[static_cast<std::size_t>(n)];
      kp = {from.x, from.y, kFloor, from.size};
      queue.push_back(m);
    }
  }
}

}  // namespace

std::vector<Pose> decode_frame(const FieldTensor& cif, const FieldTensor& caf, const Skeleton& skeleton,
                               const DecoderConfig& config, DecodeProfile* profile) {
  validate_decoder_config(config);
  check_fieldset(cif, caf, skeleton);
  DecodeProfile local;
  DecodeProfile& prof = profile != nullptr ? *profile : local;
  prof = {};

  auto t = Clock::now();
  const bool need_hr = config.caf_rescoring || config.seed_rescoring == SeedRescoring::hr;
  HrMap hr_map;
  if (need_hr) hr_map = cif_hr_accumulate(cif, config.hr_threshold);
  const HrMap* hr = need_hr ? &hr_map : nullptr;
  const AssociationIndex index(caf, config.caf_threshold);
  prof.accumulate_ms = elapsed_ms(t);

  t = Clock::now();
  const auto seeds = extract_seeds(cif, hr, config);
  prof.seeds = seeds.size();
  prof.seeds_ms = elapsed_ms(t);

  t = Clock::now();
  detail::GrowthGraph graph(skeleton.num_keypoints());
  detail::add_spatial_links(graph, skeleton, index, config.caf_rescoring ? hr : nullptr, config.use_dense_edges, 0);

  std::optional<AssociationIndex> relaxed_index;
  std::optional<detail::GrowthGraph> relaxed_graph;
  if (config.force_complete) {
    relaxed_index.emplace(caf, 0.0);
    relaxed_graph.emplace(skeleton.num_keypoints());
    detail::add_spatial_links(*relaxed_graph, skeleton, *relaxed_index, config.caf_rescoring ? hr : nullptr,
                              config.use_dense_edges, 0);
  }

  Occupancy occupancy;
  std::vector<Pose> poses;
  for (const Seed& seed : seeds) {
    if (occupancy.occupied(seed.keypoint, seed.x, seed.y)) continue;
    std::vector<Keypoint> nodes(static_cast<std::size_t>(skeleton.num_keypoints()));
    nodes[static_cast<std::size_t>(seed.keypoint)] = {seed.x, seed.y, seed.score, seed.size};
    detail::grow(nodes, graph, config);
    if (config.force_complete) complete_pose(nodes, skeleton, *relaxed_graph, config);
    Pose pose{std::move(nodes), 0.0};
    pose.score = instance_score(pose);
    for (int k = 0; k < skeleton.num_keypoints(); ++k) {
      const Keypoint& kp = pose.keypoints[static_cast<std::size_t>(k)];
      if (kp.detected()) occupancy.claim(k, kp.x, kp.y, nms_radius(kp, config.nms));
    }
    poses.push_back(std::move(pose));
  }
  prof.growth_ms = elapsed_ms(t);

  t = Clock::now();
  auto out = keypoint_nms(std::move(poses), config.nms, config.max_poses);
  prof.nms_ms = elapsed_ms(t);
  return out;
}

}  // namespace pifdecode
