// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/losses.hpp"

#include <cmath>

#include "pifdecode/error.hpp"

namespace pifdecode {

namespace {

void check_confidence(int c, double c_hat) {
  if (c != 0 && c != 1) throw DomainError("target confidence must be 0 or 1");
  if (!(c_hat > 0.0 && c_hat < 1.0)) throw DomainError("predicted confidence must lie strictly in (0, 1)");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double focal_bce(int c, double c_hat, const LossConfig& config) {
  check_confidence(c, c_hat);
  const double p_t = c == 1 ? c_hat : 1.0 - c_hat;
  const double bce = std::min(-std::log(p_t), config.bce_clip);
  return std::pow(1.0 - p_t, config.focal_gamma) * bce;
}

double focal_bce_grad(int c, double c_hat, const LossConfig& config) {
  check_confidence(c, c_hat);
  const double p_t = c == 1 ? c_hat : 1.0 - c_hat;
  const double dp = c == 1 ? 1.0 : -1.0;
  const double raw = -std::log(p_t);
  const bool clipped = raw > config.bce_clip;
  const double bce = clipped ? config.bce_clip : raw;
  const double gamma = config.focal_gamma;
  const double dw = gamma == 0.0 ? 0.0 : -gamma * std::pow(1.0 - p_t, gamma - 1.0);
  const double dbce = clipped ? 0.0 : -1.0 / p_t;
  return dp * (dw * bce + std::pow(1.0 - p_t, gamma) * dbce);
}

double laplace_localization(Point2 v, Point2 v_hat, double b_hat, const LossConfig& config) {
  if (!(b_hat > 0.0)) throw DomainError("b_hat must be positive");
  const double dx = v.x - v_hat.x;
  const double dy = v.y - v_hat.y;
  const double r = std::sqrt(dx * dx + dy * dy + config.b_min * config.b_min);
  return r / b_hat + std::log(b_hat);
}

LaplaceGradient laplace_localization_grad(Point2 v, Point2 v_hat, double b_hat, const LossConfig& config) {
  if (!(b_hat > 0.0)) throw DomainError("b_hat must be positive");
  const double dx = v.x - v_hat.x;
  const double dy = v.y - v_hat.y;
  const double r = std::sqrt(dx * dx + dy * dy + config.b_min * config.b_min);
  LaplaceGradient g;
  g.v = {dx / (b_hat * r), dy / (b_hat * r)};
  g.v_hat = {-g.v.x, -g.v.y};
  g.b_hat = -r / (b_hat * b_hat) + 1.0 / b_hat;
  return g;
}

double scale_loss(double s, double s_hat, const LossConfig& config) {
  if (!(s > 0.0)) throw DomainError("target size must be positive");
  if (!(s_hat > 0.0)) throw DomainError("predicted size must be positive");
  return std::abs(1.0 - s_hat / s) / config.b_sigma;
}

ScaleGradient scale_loss_grad(double s, double s_hat, const LossConfig& config) {
  if (!(s > 0.0)) throw DomainError("target size must be positive");
  if (!(s_hat > 0.0)) throw DomainError("predicted size must be positive");
  const double sg = sign(1.0 - s_hat / s);
  return {sg * s_hat / (s * s) / config.b_sigma, -sg / s / config.b_sigma};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

LossBreakdown composite_field_loss(const FieldTensor& pred, const FieldTensor& target, const LossMasks& masks,
                                   const LossConfig& config) {
  if (pred.kind() != target.kind()) throw ShapeError("prediction and target field kinds differ");
  if (pred.kind() == FieldKind::mask) throw ShapeError("cannot compute a loss on a mask tensor");
  if (pred.shape() != target.shape()) throw ShapeError("prediction and target shapes differ");
  if (masks.fields() != pred.fields() || masks.height() != pred.height() || masks.width() != pred.width()) {
    throw ShapeError("mask shape does not match the fields");
  }
  if (!config.field_weights.empty() && static_cast<int>(config.field_weights.size()) != pred.fields()) {
    throw ShapeError("field_weights must have one entry per field");
  }

  const bool is_cif = pred.kind() == FieldKind::cif;
  struct Endpoint {
    int x, y, b, sigma;
  };
  std::vector<Endpoint> endpoints;
  if (is_cif) {
    endpoints.push_back({cif_channel::x, cif_channel::y, cif_channel::b, cif_channel::sigma});
  } else {
    endpoints.push_back({caf_channel::x1, caf_channel::y1, caf_channel::b1, caf_channel::sigma1});
    endpoints.push_back({caf_channel::x2, caf_channel::y2, caf_channel::b2, caf_channel::sigma2});
  }
  const int conf = is_cif ? cif_channel::c : caf_channel::c;

  std::vector<double> conf_terms;
  std::vector<std::vector<double>> loc_terms(endpoints.size());
  std::vector<std::vector<double>> scale_terms(endpoints.size());

  for (int f = 0; f < pred.fields(); ++f) {
    const double w = config.field_weights.empty() ? 1.0 : config.field_weights[f];
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x) {
        if (masks.confidence(f, y, x)) {
          const int c = target.at(conf, f, y, x) >= 0.5f ? 1 : 0;
          const double c_hat = pred.at(conf, f, y, x);
          if (c_hat < 0.0 || c_hat > 1.0) throw DomainError("predicted confidence outside [0, 1]");
          const double p_t = c == 1 ? c_hat : 1.0 - c_hat;
          double term;
          if (p_t >= 1.0) {
            term = 0.0;
          } else if (p_t <= 0.0) {
            term = config.bce_clip;
          } else {
            term = focal_bce(c, c_hat, config);
          }
          conf_terms.push_back(w * term);
        }
        for (std::size_t e = 0; e < endpoints.size(); ++e) {
          const Endpoint& ep = endpoints[e];
          if (masks.localization(f, y, x)) {
            loc_terms[e].push_back(w * laplace_localization({target.at(ep.x, f, y, x), target.at(ep.y, f, y, x)},
                                                            {pred.at(ep.x, f, y, x), pred.at(ep.y, f, y, x)},
                                                            pred.at(ep.b, f, y, x), config));
          }
          if (masks.scale(f, y, x)) {
            scale_terms[e].push_back(
                w * scale_loss(target.at(ep.sigma, f, y, x), pred.at(ep.sigma, f, y, x), config));
          }
        }
      }
    }
  }

  LossBreakdown out;
  out.channels.push_back({"c", pairwise_sum(conf_terms), conf_terms.size()});
  out.confidence = out.channels.back().sum;
  for (std::size_t e = 0; e < endpoints.size(); ++e) {
    const std::string suffix = is_cif ? "" : std::to_string(e + 1);
    out.channels.push_back({"v" + suffix, pairwise_sum(loc_terms[e]), loc_terms[e].size()});
    out.localization += out.channels.back().sum;
  }
  for (std::size_t e = 0; e < endpoints.size(); ++e) {
    const std::string suffix = is_cif ? "" : std::to_string(e + 1);
    out.channels.push_back({"sigma" + suffix, pairwise_sum(scale_terms[e]), scale_terms[e].size()});
    out.scale += out.channels.back().sum;
  }
  out.total = out.confidence + out.localization + out.scale;
  return out;
}

}  // namespace pifdecode
