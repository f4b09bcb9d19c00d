// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pifdecode/encoder.hpp"
#include "pifdecode/fields.hpp"

namespace pifdecode {

struct LossConfig {
  double focal_gamma = 2.0;
  double b_min = 1.0;     // px
  double b_sigma = 3.0;
  double bce_clip = 5.0;  // nats, applied before focal weighting
  std::vector<double> field_weights;  // per keypoint or edge; empty means 1 for every field
};

struct ChannelLoss {
  std::string channel;
  double sum = 0.0;
  std::size_t count = 0;
};

struct LossBreakdown {
  double confidence = 0.0;
  double localization = 0.0;
  double scale = 0.0;
  double total = 0.0;
  std::vector<ChannelLoss> channels;  // c, then one entry per endpoint for localization and scale
};

/// Focal-weighted binary cross entropy: (1 - p_t)^gamma * min(BCE, clip).
double focal_bce(int c, double c_hat, const LossConfig& config = {});
/// Derivative with respect to c_hat.
double focal_bce_grad(int c, double c_hat, const LossConfig& config = {});

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// (1 / b_hat) * sqrt(dx^2 + dy^2 + b_min^2) + ln(b_hat).
double laplace_localization(Point2 v, Point2 v_hat, double b_hat, const LossConfig& config = {});

struct LaplaceGradient {
  Point2 v;
  Point2 v_hat;
  double b_hat = 0.0;
};
LaplaceGradient laplace_localization_grad(Point2 v, Point2 v_hat, double b_hat, const LossConfig& config = {});

/// |1 - s_hat / s| / b_sigma.
double scale_loss(double s, double s_hat, const LossConfig& config = {});

struct ScaleGradient {
  double s = 0.0;
  double s_hat = 0.0;
};
ScaleGradient scale_loss_grad(double s, double s_hat, const LossConfig& config = {});

/// Sums the three loss parts over the masked cells. Confidences of exactly 0
/// or 1 in `pred` are evaluated as limits of focal_bce.
LossBreakdown composite_field_loss(const FieldTensor& pred, const FieldTensor& target, const LossMasks& masks,
                                   const LossConfig& config = {});

/// Pairwise (cascade) summation; the result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace pifdecode
