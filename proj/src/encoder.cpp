// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pifdecode/error.hpp"
#include "random.hpp"

namespace pifdecode {

LossMasks::LossMasks(FieldTensor planes) : planes_(std::move(planes)) {
  if (planes_.kind() != FieldKind::mask) throw ShapeError("LossMasks requires a mask tensor");
}

std::size_t LossMasks::count_localization() const {
  std::size_t n = 0;
  for (int f = 0; f < fields(); ++f) {
    for (float v : planes_.plane(mask_channel::localization, f)) n += v != 0.0f;
  }
  return n;
}

std::vector<GroundTruthAnnotation> suppress_self_hidden(const std::vector<GroundTruthAnnotation>& annotations,
                                                        double radius_factor) {
  std::vector<GroundTruthAnnotation> out = annotations;
  for (std::size_t h = 0; h < out.size(); ++h) {
    for (std::size_t k = 0; k < out[h].keypoints.size(); ++k) {
      auto& hidden = out[h].keypoints[k];
      if (hidden.visibility != Visibility::hidden) continue;
      for (const auto& other : annotations) {
        if (k >= other.keypoints.size()) continue;
        const auto& visible = other.keypoints[k];
        if (visible.visibility != Visibility::visible) continue;
        if (std::hypot(visible.x - hidden.x, visible.y - hidden.y) < radius_factor * visible.size) {
          hidden.visibility = Visibility::absent;
          break;
        }
      }
    }
  }
  return out;
}

namespace {

void check_keypoints(const Scene& scene, const Skeleton& skeleton) {
  for (const auto& ann : scene.annotations) {
    if (static_cast<int>(ann.keypoints.size()) != skeleton.num_keypoints()) {
      throw ShapeError("annotation " + std::to_string(ann.id) + " has " +
                       std::to_string(ann.keypoints.size()) + " keypoints, skeleton " + skeleton.name +
                       " has " + std::to_string(skeleton.num_keypoints()));
    }
    for (const auto& kp : ann.keypoints) {
      if (!kp.labeled()) continue;
      if (!scene.image_size.contains(kp.x, kp.y)) {
        throw EncodeOutOfBoundsError("annotation " + std::to_string(ann.id) + " keypoint (" +
                                     std::to_string(kp.x) + ", " + std::to_string(kp.y) +
                                     ") lies outside the image");
      }
      if (!(kp.size > 0.0)) {
        throw DomainError("annotation " + std::to_string(ann.id) + " has a labeled keypoint with size <= 0");
      }
    }
  }
}

/// m_c everywhere except cell centers inside crowd regions.
FieldTensor make_masks(const Scene& scene, int fields, int stride) {
  auto masks = FieldTensor::for_image(FieldKind::mask, fields, scene.image_size, stride, scene.frame);
  for (int y = 0; y < masks.height(); ++y) {
    for (int x = 0; x < masks.width(); ++x) {
      bool crowd = false;
      for (const auto& ann : scene.annotations) {
        for (const auto& box : ann.crowd_regions) crowd = crowd || box.contains(x * stride, y * stride);
      }
      for (int f = 0; f < fields; ++f) masks.at(mask_channel::confidence, f, y, x) = crowd ? 0.0f : 1.0f;
    }
  }
  return masks;
}

void mark_active(FieldTensor& masks, int field, int y, int x) {
  const float allowed = masks.at(mask_channel::confidence, field, y, x);
  masks.at(mask_channel::localization, field, y, x) = allowed;
  masks.at(mask_channel::scale, field, y, x) = allowed;
}

struct Segment {
  int field;
  double x1, y1, x2, y2;
  double sigma1, sigma2;
};

double distance_to_segment(double px, double py, const Segment& s) {
  const double dx = s.x2 - s.x1;
  const double dy = s.y2 - s.y1;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - s.x1) * dx + (py - s.y1) * dy) / len2, 0.0, 1.0);
  return std::hypot(px - (s.x1 + t * dx), py - (s.y1 + t * dy));
}

/// Writes association targets into every cell within max(sigma1, stride) of
/// the segment; a cell claimed by several segments keeps the nearest one.
EncodedField encode_segments(FieldKind kind, int fields, const Scene& scene, const std::vector<Segment>& segments,
                             const EncoderConfig& config) {
  const int stride = config.stride;
  auto field = FieldTensor::for_image(kind, fields, scene.image_size, stride, scene.frame);
  auto masks = make_masks(scene, fields, stride);
  std::vector<double> best(static_cast<std::size_t>(fields) * field.plane_size(),
                           std::numeric_limits<double>::infinity());

  for (const auto& s : segments) {
    const double radius = std::max(s.sigma1, static_cast<double>(stride));
    const int cx0 = std::max(0, static_cast<int>(std::ceil((std::min(s.x1, s.x2) - radius) / stride)));
    const int cx1 = std::min(field.width() - 1, static_cast<int>(std::floor((std::max(s.x1, s.x2) + radius) / stride)));
    const int cy0 = std::max(0, static_cast<int>(std::ceil((std::min(s.y1, s.y2) - radius) / stride)));
    const int cy1 = std::min(field.height() - 1, static_cast<int>(std::floor((std::max(s.y1, s.y2) + radius) / stride)));
    for (int y = cy0; y <= cy1; ++y) {
      for (int x = cx0; x <= cx1; ++x) {
        const double d = distance_to_segment(x * stride, y * stride, s);
        if (d > radius) continue;
        double& b = best[static_cast<std::size_t>(s.field) * field.plane_size() + y * field.width() + x];
        if (d >= b) continue;
        b = d;
        field.at(caf_channel::c, s.field, y, x) = 1.0f;
        field.at(caf_channel::x1, s.field, y, x) = static_cast<float>(s.x1);
        field.at(caf_channel::y1, s.field, y, x) = static_cast<float>(s.y1);
        field.at(caf_channel::x2, s.field, y, x) = static_cast<float>(s.x2);
        field.at(caf_channel::y2, s.field, y, x) = static_cast<float>(s.y2);
        field.at(caf_channel::b1, s.field, y, x) = static_cast<float>(config.spread);
        field.at(caf_channel::b2, s.field, y, x) = static_cast<float>(config.spread);
        field.at(caf_channel::sigma1, s.field, y, x) = static_cast<float>(s.sigma1);
        field.at(caf_channel::sigma2, s.field, y, x) = static_cast<float>(s.sigma2);
        mark_active(masks, s.field, y, x);
      }
    }
  }
  return {std::move(field), LossMasks(std::move(masks))};
}

void check_config(const EncoderConfig& config) {
  if (config.stride <= 0) throw ShapeError("encoder stride must be positive");
  if (config.window <= 0) throw ShapeError("encoder window must be positive");
}

}  // namespace

EncodedField encode_cif(const Scene& scene, const Skeleton& skeleton, const EncoderConfig& config) {
  check_config(config);
  check_keypoints(scene, skeleton);
  const int stride = config.stride;
  const int fields = skeleton.num_keypoints();
  auto cif = FieldTensor::for_image(FieldKind::cif, fields, scene.image_size, stride, scene.frame);
  auto masks = make_masks(scene, fields, stride);
  std::vector<double> best(static_cast<std::size_t>(fields) * cif.plane_size(),
                           std::numeric_limits<double>::infinity());

  const int before = (config.window - 1) / 2;
  const double shift = (config.window % 2 == 1) ? 0.5 : 0.0;
  for (const auto& ann : scene.annotations) {
    for (int k = 0; k < fields; ++k) {
      const auto& kp = ann.keypoints[k];
      if (!kp.labeled()) continue;
      const int lo_x = static_cast<int>(std::floor(kp.x / stride + shift)) - before;
      const int lo_y = static_cast<int>(std::floor(kp.y / stride + shift)) - before;
      for (int y = std::max(0, lo_y); y < std::min(cif.height(), lo_y + config.window); ++y) {
        for (int x = std::max(0, lo_x); x < std::min(cif.width(), lo_x + config.window); ++x) {
          const double d = std::hypot(x * stride - kp.x, y * stride - kp.y);
          double& b = best[static_cast<std::size_t>(k) * cif.plane_size() + y * cif.width() + x];
          if (d >= b) continue;
          b = d;
          cif.at(cif_channel::c, k, y, x) = 1.0f;
          cif.at(cif_channel::x, k, y, x) = static_cast<float>(kp.x);
          cif.at(cif_channel::y, k, y, x) = static_cast<float>(kp.y);
          cif.at(cif_channel::b, k, y, x) = static_cast<float>(config.spread);
          cif.at(cif_channel::sigma, k, y, x) = static_cast<float>(kp.size);
          mark_active(masks, k, y, x);
        }
      }
    }
  }
  return {std::move(cif), LossMasks(std::move(masks))};
}

EncodedField encode_caf(const Scene& scene, const Skeleton& skeleton, const EncoderConfig& config) {
  check_config(config);
  check_keypoints(scene, skeleton);
  std::vector<Segment> segments;
  for (const auto& ann : scene.annotations) {
    for (int e = 0; e < skeleton.num_edges(); ++e) {
      const auto& a = ann.keypoints[skeleton.edges[e].source];
      const auto& b = ann.keypoints[skeleton.edges[e].target];
      if (!a.labeled() || !b.labeled()) continue;
      segments.push_back({e, a.x, a.y, b.x, b.y, a.size, b.size});
    }
  }
  return encode_segments(FieldKind::caf, skeleton.num_edges(), scene, segments, config);
}

EncodedField encode_tcaf(const Scene& previous, const Scene& current, const Skeleton& skeleton,
                         const EncoderConfig& config) {
  check_config(config);
  check_keypoints(previous, skeleton);
  check_keypoints(current, skeleton);
  if (!(previous.image_size == current.image_size)) throw ShapeError("TCAF frames differ in image size");
  std::vector<Segment> segments;
  for (const auto& cur : current.annotations) {
    const GroundTruthAnnotation* prev = previous.find(cur.id);
    if (prev == nullptr) continue;
    for (int j = 0; j < skeleton.num_temporal_edges(); ++j) {
      const int k = skeleton.temporal_edges[j];
      const auto& a = prev->keypoints[k];
      const auto& b = cur.keypoints[k];
      if (!a.labeled() || !b.labeled()) continue;
      segments.push_back({j, a.x, a.y, b.x, b.y, a.size, b.size});
    }
  }
  return encode_segments(FieldKind::tcaf, skeleton.num_temporal_edges(), current, segments, config);
}

void zero_edge_for_annotation(FieldTensor& caf, const Skeleton& skeleton, int edge,
                              const GroundTruthAnnotation& annotation) {
  if (caf.kind() != FieldKind::caf) throw ShapeError("zero_edge_for_annotation expects a CAF tensor");
  const auto& a = annotation.keypoints.at(skeleton.edges.at(edge).source);
  const auto& b = annotation.keypoints.at(skeleton.edges.at(edge).target);
  const auto close = [](float v, double ref) { return std::abs(v - ref) < 1e-3; };
  for (int y = 0; y < caf.height(); ++y) {
    for (int x = 0; x < caf.width(); ++x) {
      if (caf.at(caf_channel::c, edge, y, x) == 0.0f) continue;
      if (close(caf.at(caf_channel::x1, edge, y, x), a.x) && close(caf.at(caf_channel::y1, edge, y, x), a.y) &&
          close(caf.at(caf_channel::x2, edge, y, x), b.x) && close(caf.at(caf_channel::y2, edge, y, x), b.y)) {
        caf.at(caf_channel::c, edge, y, x) = 0.0f;
      }
    }
  }
}

void add_confidence_noise(FieldTensor& field, const NoiseConfig& config) {
  if (field.kind() == FieldKind::mask) throw ShapeError("cannot add noise to a mask tensor");
  detail::Rng rng(config.seed);
  const int stride = field.stride();
  const bool is_cif = field.kind() == FieldKind::cif;
  for (int f = 0; f < field.fields(); ++f) {
    for (int y = 0; y < field.height(); ++y) {
      for (int x = 0; x < field.width(); ++x) {
        float& c = field.at(0, f, y, x);
        const bool empty = c == 0.0f;
        c = static_cast<float>(std::clamp(c + config.confidence_sigma * rng.normal(), 0.0, 1.0));
        if (!empty) continue;
        const auto cx = static_cast<float>(x * stride);
        const auto cy = static_cast<float>(y * stride);
        if (is_cif) {
          field.at(cif_channel::x, f, y, x) = cx;
          field.at(cif_channel::y, f, y, x) = cy;
          field.at(cif_channel::b, f, y, x) = 1.0f;
          field.at(cif_channel::sigma, f, y, x) = static_cast<float>(stride);
        } else {
          field.at(caf_channel::x1, f, y, x) = cx;
          field.at(caf_channel::y1, f, y, x) = cy;
          field.at(caf_channel::x2, f, y, x) = cx;
          field.at(caf_channel::y2, f, y, x) = cy;
          field.at(caf_channel::b1, f, y, x) = 1.0f;
          field.at(caf_channel::b2, f, y, x) = 1.0f;
          field.at(caf_channel::sigma1, f, y, x) = static_cast<float>(stride);
          field.at(caf_channel::sigma2, f, y, x) = static_cast<float>(stride);
        }
      }
    }
  }
}

}  // namespace pifdecode
