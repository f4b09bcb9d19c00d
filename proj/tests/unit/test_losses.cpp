// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pifdecode/error.hpp"
#include "support.hpp"

using namespace pifdecode;

namespace {

const ChannelLoss& channel(const LossBreakdown& b, const std::string& name) {
  for (const auto& c : b.channels) {
    if (c.channel == name) return c;
  }
  FAIL("missing channel " << name);
  return b.channels.front();
}

FieldTensor random_field(std::mt19937_64& rng, FieldKind kind, int fields, ImageSize size, int stride) {
  FieldTensor t = FieldTensor::for_image(kind, fields, size, stride);
  std::uniform_real_distribution<float> u(0.01f, 0.99f), pos(0.0f, 60.0f), pos_b(0.5f, 4.0f);
  const bool cif = kind == FieldKind::cif;
  for (int f = 0; f < fields; ++f) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        t.at(0, f, y, x) = u(rng);
        if (cif) {
          t.at(cif_channel::x, f, y, x) = pos(rng);
          t.at(cif_channel::y, f, y, x) = pos(rng);
          t.at(cif_channel::b, f, y, x) = pos_b(rng);
          t.at(cif_channel::sigma, f, y, x) = pos_b(rng);
        } else {
          for (int ch = 1; ch <= 4; ++ch) t.at(ch, f, y, x) = pos(rng);
          for (int ch = 5; ch <= 8; ++ch) t.at(ch, f, y, x) = pos_b(rng);
        }
      }
    }
  }
  return t;
}

LossMasks random_masks(std::mt19937_64& rng, int fields, ImageSize size, int stride) {
  FieldTensor m = FieldTensor::for_image(FieldKind::mask, fields, size, stride);
  std::bernoulli_distribution coin(0.5);
  for (int f = 0; f < fields; ++f) {
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        const bool c = coin(rng);
        m.at(mask_channel::confidence, f, y, x) = c ? 1.0f : 0.0f;
        m.at(mask_channel::localization, f, y, x) = c && coin(rng) ? 1.0f : 0.0f;
        m.at(mask_channel::scale, f, y, x) = c && coin(rng) ? 1.0f : 0.0f;
      }
    }
  }
  return LossMasks(std::move(m));
}

}  // namespace

TEST_SUITE("losses") {
  TEST_CASE("focal BCE examples") {
    CHECK(focal_bce(1, 1.0 - 1e-12) == doctest::Approx(0.0));
    CHECK(focal_bce(1, 0.5) == doctest::Approx(0.25 * std::numbers::ln2).epsilon(1e-12));
    CHECK(focal_bce(1, 0.5) == doctest::Approx(0.17329).epsilon(1e-4));
    // Clipped before weighting: w = (1 - 1e-9)^2.
    const double w = (1.0 - 1e-9) * (1.0 - 1e-9);
    CHECK(focal_bce(1, 1e-9) == w * 5.0);
    CHECK(focal_bce(0, 1.0 - 1e-9) == doctest::Approx(w * 5.0));
    LossConfig no_focal;
    no_focal.focal_gamma = 0.0;
    CHECK(focal_bce(0, 0.25, no_focal) == doctest::Approx(-std::log(0.75)));
  }

  TEST_CASE("focal BCE domain") {
    CHECK_THROWS_AS(focal_bce(1, 0.0), DomainError);
    CHECK_THROWS_AS(focal_bce(1, 1.0), DomainError);
    CHECK_THROWS_AS(focal_bce(2, 0.5), DomainError);
    CHECK_THROWS_AS(focal_bce_grad(0, -0.1), DomainError);
  }

  TEST_CASE("property: focal BCE decreases in p_t") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<> u(1e-6, 1 - 1e-6);
    for (int i = 0; i < 2000; ++i) {
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      CHECK(focal_bce(1, a) >= focal_bce(1, b));
      CHECK(focal_bce(0, 1 - a) >= focal_bce(0, 1 - b));
    }
  }

  TEST_CASE("Laplace localization examples") {
    CHECK(laplace_localization({3, 3}, {3, 3}, 1.0) == doctest::Approx(1.0));
    CHECK(laplace_localization({3, 3}, {3, 3}, std::numbers::e) == doctest::Approx(1.0 / std::numbers::e + 1.0));
    CHECK(laplace_localization({3, 4}, {0, 0}, 1.0) == doctest::Approx(std::sqrt(26.0)));
    CHECK(laplace_localization({3, 4}, {0, 0}, 1.0) == doctest::Approx(5.09902).epsilon(1e-5));
    CHECK_THROWS_AS(laplace_localization({0, 0}, {0, 0}, 0.0), DomainError);
    CHECK_THROWS_AS(laplace_localization({0, 0}, {0, 0}, -1.0), DomainError);
  }

  TEST_CASE("scale loss examples") {
    CHECK(scale_loss(3.0, 3.0) == 0.0);
    CHECK(scale_loss(2.0, 1.0) == 1.0 / 6.0);
    CHECK(scale_loss(1.0, 2.0) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(scale_loss(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(scale_loss(1.0, 0.0), DomainError);
  }

  TEST_CASE("analytic gradients match central differences") {
    for (const auto& g : testing::loss_gradient_suite(1000, 42)) {
      INFO(g.component);
      CHECK(g.draws == 1000);
      CHECK(g.max_relative_error < 1e-4);
    }
  }

  TEST_CASE("focal gradient matches a fine long double difference") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<> u(1e-6, 1 - 1e-6);
    for (int i = 0; i < 2000; ++i) {
      const int c = i % 2;
      const double c_hat = u(rng);
      const double p_t = c == 1 ? c_hat : 1 - c_hat;
      if (std::abs(p_t - std::exp(-5.0)) < 1e-6) continue;
      CHECK(testing::relative_error(focal_bce_grad(c, c_hat), testing::focal_reference_gradient(c, c_hat, {})) < 1e-6);
    }
  }

  TEST_CASE("property: Laplace loss is minimized at b_hat = L2") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<> u(-20, 20);
    const LossConfig cfg;
    for (int i = 0; i < 200; ++i) {
      const Point2 v{u(rng), u(rng)}, vh{u(rng), u(rng)};
      const double l2 = std::sqrt((v.x - vh.x) * (v.x - vh.x) + (v.y - vh.y) * (v.y - vh.y) + cfg.b_min * cfg.b_min);
      CHECK(testing::laplace_argmin_b(v, vh, cfg) == doctest::Approx(l2).epsilon(1e-3));
      CHECK(laplace_localization_grad(v, vh, l2, cfg).b_hat == doctest::Approx(0.0));
    }
  }

  TEST_CASE("pairwise summation") {
    std::vector<double> values(1000);
    std::iota(values.begin(), values.end(), 1.0);
    CHECK(pairwise_sum(values) == 500500.0);
    CHECK(pairwise_sum({}) == 0.0);
    std::vector<double> tiny(1 << 16, 0.1);
    CHECK(std::abs(pairwise_sum(tiny) - 6553.6) < 1e-9);
  }

  TEST_CASE("composite loss at the optimum reduces to the mask count") {
    const Skeleton s = builtin_skeleton("coco17");
    const Scene scene = testing::generated_scene(3, s, SceneConfig{.image_size = {201, 201}, .max_poses = 2, .max_height = 100});
    const EncodedField target = encode_cif(scene, s);
    const FieldTensor pred = target.field;  // b channel holds the spread 1 = b_min
    const LossBreakdown loss = composite_field_loss(pred, target.field, target.masks);
    CHECK(loss.confidence == 0.0);
    CHECK(loss.scale == 0.0);
    CHECK(loss.localization == doctest::Approx(static_cast<double>(target.masks.count_localization())));
    CHECK(channel(loss, "v").count == target.masks.count_localization());
    CHECK(loss.total == loss.confidence + loss.localization + loss.scale);
  }

  TEST_CASE("empty masks give zero loss") {
    std::mt19937_64 rng(4);
    const FieldTensor pred = random_field(rng, FieldKind::caf, 2, {49, 49}, 8);
    const FieldTensor target = random_field(rng, FieldKind::caf, 2, {49, 49}, 8);
    const LossBreakdown loss = composite_field_loss(pred, target, LossMasks(FieldTensor::for_image(FieldKind::mask, 2, {49, 49}, 8)));
    CHECK(loss.total == 0.0);
    for (const auto& c : loss.channels) CHECK(c.count == 0);
  }

  TEST_CASE("CAF loss has two localization and scale components") {
    std::mt19937_64 rng(5);
    const LossMasks masks = random_masks(rng, 1, {49, 49}, 8);
    const FieldTensor cif = random_field(rng, FieldKind::cif, 1, {49, 49}, 8);
    const FieldTensor caf = random_field(rng, FieldKind::caf, 1, {49, 49}, 8);
    const LossBreakdown a = composite_field_loss(cif, cif, masks);
    const LossBreakdown b = composite_field_loss(caf, caf, masks);
    CHECK(channel(b, "v1").count + channel(b, "v2").count == 2 * channel(a, "v").count);
    CHECK(channel(b, "sigma1").count + channel(b, "sigma2").count == 2 * channel(a, "sigma").count);
    CHECK(channel(b, "c").count == channel(a, "c").count);
  }

  TEST_CASE("property: composite loss is additive over disjoint mask partitions") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const FieldKind kind = trial % 2 ? FieldKind::caf : FieldKind::cif;
      const FieldTensor pred = random_field(rng, kind, 3, {41, 33}, 8);
      FieldTensor target = random_field(rng, kind, 3, {41, 33}, 8);
      for (int f = 0; f < 3; ++f) {
        for (float& c : target.plane(0, f)) c = c > 0.5f ? 1.0f : 0.0f;
      }
      const LossMasks all = random_masks(rng, 3, {41, 33}, 8);
      FieldTensor m1 = all.tensor(), m2 = all.tensor();
      std::bernoulli_distribution coin(0.5);
      for (int f = 0; f < 3; ++f) {
        for (int y = 0; y < m1.height(); ++y) {
          for (int x = 0; x < m1.width(); ++x) {
            FieldTensor& off = coin(rng) ? m1 : m2;
            for (int ch = 0; ch < 3; ++ch) off.at(ch, f, y, x) = 0.0f;
          }
        }
      }
      LossConfig cfg;
      cfg.field_weights = {1.0, 0.5, 2.0};
      const auto whole = composite_field_loss(pred, target, all, cfg);
      const auto p1 = composite_field_loss(pred, target, LossMasks(m1), cfg);
      const auto p2 = composite_field_loss(pred, target, LossMasks(m2), cfg);
      CHECK(whole.confidence == doctest::Approx(p1.confidence + p2.confidence).epsilon(1e-12));
      CHECK(whole.localization == doctest::Approx(p1.localization + p2.localization).epsilon(1e-12));
      CHECK(whole.scale == doctest::Approx(p1.scale + p2.scale).epsilon(1e-12));
    }
  }

  TEST_CASE("composite loss errors") {
    std::mt19937_64 rng(7);
    const FieldTensor cif = random_field(rng, FieldKind::cif, 2, {49, 49}, 8);
    const FieldTensor caf = random_field(rng, FieldKind::caf, 2, {49, 49}, 8);
    const LossMasks masks = random_masks(rng, 2, {49, 49}, 8);
    CHECK_THROWS_AS(composite_field_loss(cif, caf, masks), ShapeError);
    CHECK_THROWS_AS(composite_field_loss(cif, random_field(rng, FieldKind::cif, 2, {57, 49}, 8), masks), ShapeError);
    CHECK_THROWS_AS(composite_field_loss(cif, cif, random_masks(rng, 3, {49, 49}, 8)), ShapeError);
    LossConfig cfg;
    cfg.field_weights = {1.0};
    CHECK_THROWS_AS(composite_field_loss(cif, cif, masks, cfg), ShapeError);
    FieldTensor bad = cif;
    bad.at(0, 0, 0, 0) = 1.5f;
    bad.at(0, 1, 0, 0) = 1.5f;
    FieldTensor all = FieldTensor::for_image(FieldKind::mask, 2, {49, 49}, 8);
    for (float& m : all.plane(mask_channel::confidence, 0)) m = 1.0f;
    for (float& m : all.plane(mask_channel::confidence, 1)) m = 1.0f;
    CHECK_THROWS_AS(composite_field_loss(bad, cif, LossMasks(all)), DomainError);
  }
}
