// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "pifdecode/error.hpp"
#include "support.hpp"

using namespace pifdecode;

namespace {

SceneConfig few_poses(int max_poses) {
  SceneConfig c;
  c.image_size = {401, 401};
  c.min_poses = 1;
  c.max_poses = max_poses;
  c.min_height = 60.0;
  c.max_height = 120.0;
  return c;
}

Pose jittered(const GroundTruthAnnotation& gt, double amount, double score, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, amount);
  Pose p = testing::pose_from(gt, score);
  for (auto& kp : p.keypoints) {
    if (!kp.detected()) continue;
    kp.x += n(rng);
    kp.y += n(rng);
  }
  p.score = score;
  return p;
}

/// Scene with boxes given as keypoint pairs on a two-keypoint skeleton.
Scene box_scene(const std::vector<std::array<double, 4>>& boxes) {
  Scene s;
  s.image_size = {400, 400};
  std::int64_t id = 1;
  for (const auto& b : boxes) s.annotations.push_back(testing::annotation(id++, {{b[0], b[1]}, {b[2], b[3]}}));
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("OKS examples") {
    const auto skeleton = builtin_skeleton("coco17");
    const auto scene = testing::generated_scene(3, skeleton, few_poses(1));
    const auto& gt = scene.annotations[0];
    CHECK(oks(testing::pose_from(gt), gt, skeleton) == doctest::Approx(1.0));

    Pose far = testing::pose_from(gt);
    for (auto& kp : far.keypoints) kp.x += 1e6;
    CHECK(oks(far, gt, skeleton) == doctest::Approx(0.0));

    // One labeled keypoint with d^2 = 2 * area * k^2.
    const auto pair = testing::pair_skeleton();
    auto single = testing::annotation(1, {{50, 50}, {0, 0}});
    single.keypoints[1].visibility = Visibility::absent;
    const double area = 400.0;
    const double k = 2.0 * pair.sigmas[0];
    Pose p = testing::pose_from(testing::annotation(1, {{50 + std::sqrt(2.0 * area * k * k), 50}, {0, 0}}));
    CHECK(oks(p, single, pair, area) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    Pose none = p;
    none.keypoints[0] = {};
    CHECK(oks(none, single, pair, area) == 0.0);

    GroundTruthAnnotation unlabeled;
    unlabeled.keypoints.resize(2);
    CHECK_THROWS_AS(oks(p, unlabeled, pair, area), DomainError);
    CHECK_THROWS_AS(oks(p, single, pair, 0.0), DomainError);
  }

  TEST_CASE("property: OKS equals the reference, is symmetric and translation invariant") {
    const auto skeleton = builtin_skeleton("coco17");
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> shift(-200.0, 200.0);
    for (int trial = 0; trial < 200; ++trial) {
      const auto scene = testing::generated_scene(rng(), skeleton, few_poses(1));
      const auto& gt = scene.annotations[0];
      const Pose pred = jittered(gt, 1.0 + trial % 7, 0.9, rng);
      const double area = gt.area();
      const double o = oks(pred, gt, skeleton, area);
      CHECK(o == doctest::Approx(testing::reference_oks(pred, gt, skeleton.sigmas, testing::reference_area(gt))));
      CHECK(o >= 0.0);
      CHECK(o <= 1.0);

      // Swap the roles of prediction and ground truth.
      GroundTruthAnnotation swapped_gt = gt;
      Pose swapped_pred = pred;
      for (std::size_t i = 0; i < gt.keypoints.size(); ++i) {
        swapped_gt.keypoints[i].x = pred.keypoints[i].x;
        swapped_gt.keypoints[i].y = pred.keypoints[i].y;
        swapped_pred.keypoints[i].x = gt.keypoints[i].x;
        swapped_pred.keypoints[i].y = gt.keypoints[i].y;
      }
      CHECK(oks(swapped_pred, swapped_gt, skeleton, area) == doctest::Approx(o).epsilon(1e-12));

      const double dx = shift(rng), dy = shift(rng);
      GroundTruthAnnotation moved_gt = gt;
      Pose moved_pred = pred;
      for (std::size_t i = 0; i < gt.keypoints.size(); ++i) {
        moved_gt.keypoints[i].x += dx, moved_gt.keypoints[i].y += dy;
        moved_pred.keypoints[i].x += dx, moved_pred.keypoints[i].y += dy;
      }
      CHECK(oks(moved_pred, moved_gt, skeleton, area) == doctest::Approx(o).epsilon(1e-9));
    }
  }

  TEST_CASE("AP examples") {
    const auto skeleton = builtin_skeleton("coco17");
    const auto scene = testing::generated_scene(5, skeleton, few_poses(1));
    const std::vector<std::vector<GroundTruthAnnotation>> gts{scene.annotations};

    const std::vector<std::vector<Pose>> perfect{{testing::pose_from(scene.annotations[0])}};
    const auto r = average_precision(perfect, gts, skeleton);
    CHECK(r.ap == doctest::Approx(1.0));
    CHECK(r.ar == doctest::Approx(1.0));
    REQUIRE(r.per_threshold.size() == 10u);
    for (const auto& t : r.per_threshold) CHECK(t.ap == doctest::Approx(1.0));
    REQUIRE(r.ap50);
    CHECK(*r.ap50 == doctest::Approx(1.0));

    const std::vector<std::vector<Pose>> empty{{}};
    const auto e = average_precision(empty, gts, skeleton);
    CHECK(e.ap == 0.0);
    CHECK(e.ar == 0.0);

    // Only the top 20 poses per image count.
    std::vector<std::vector<Pose>> many{{}};
    for (int i = 0; i < 20; ++i) {
      Pose noise = testing::pose_from(scene.annotations[0], 0.9);
      for (auto& kp : noise.keypoints) kp.x += 1000.0;
      noise.score = 0.9;
      many[0].push_back(noise);
    }
    Pose late = testing::pose_from(scene.annotations[0], 0.1);
    late.score = 0.1;
    many[0].push_back(late);
    CHECK(average_precision(many, gts, skeleton).ap == 0.0);
  }

  TEST_CASE("AP area ranges") {
    const auto pair = testing::pair_skeleton();
    // 50x50 box is medium, 200x200 is large.
    const std::vector<std::vector<GroundTruthAnnotation>> medium_only{{testing::annotation(1, {{10, 10}, {60, 60}})}};
    const std::vector<std::vector<Pose>> preds{{testing::pose_from(medium_only[0][0])}};
    const auto r = average_precision(preds, medium_only, pair);
    REQUIRE(r.ap_medium);
    CHECK(*r.ap_medium == doctest::Approx(1.0));
    CHECK(!r.ap_large);
    CHECK(!average_precision_in_range(preds, medium_only, pair, {96.0 * 96.0, 1e12}).has_value());
  }

  TEST_CASE("property: AP equals the reference matcher") {
    const auto skeleton = builtin_skeleton("coco17");
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> score(0.05, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<std::vector<Pose>> preds;
      std::vector<std::vector<GroundTruthAnnotation>> gts;
      for (int image = 0; image < 4; ++image) {
        const auto scene = testing::generated_scene(rng(), skeleton, few_poses(5));
        gts.push_back(scene.annotations);
        preds.emplace_back();
        for (const auto& gt : scene.annotations) {
          if (u(rng) < 0.2) continue;  // missed
          preds.back().push_back(jittered(gt, 0.5 + 8.0 * u(rng), score(rng), rng));
          if (u(rng) < 0.3) preds.back().push_back(jittered(gt, 3.0, score(rng), rng));  // duplicate
        }
        if (u(rng) < 0.5) {
          Pose fp = jittered(scene.annotations[0], 1.0, score(rng), rng);
          for (auto& kp : fp.keypoints) kp.y += 300.0;
          preds.back().push_back(fp);
        }
      }
      const auto report = average_precision(preds, gts, skeleton);
      double previous = 1.0;
      for (const auto& t : report.per_threshold) {
        double recall = 0.0;
        const double want = testing::reference_ap(preds, gts, skeleton.sigmas, t.threshold, &recall);
        CHECK(t.ap == doctest::Approx(want).epsilon(1e-12));
        CHECK(t.recall == doctest::Approx(recall).epsilon(1e-12));
        // Monotone non-increasing in the threshold.
        CHECK(t.ap <= previous + 1e-12);
        previous = t.ap;
      }
      CHECK(report.ap >= 0.0);
      CHECK(report.ap <= 1.0);
    }
  }

  TEST_CASE("MOTA examples") {
    const auto skeleton = builtin_skeleton("posetrack17");
    SceneConfig cfg = few_poses(2);
    cfg.min_poses = 2;
    cfg.frames = 10;
    cfg.min_speed = cfg.max_speed = 2.0;
    const auto set = generate_scene(53, cfg, skeleton);
    std::vector<std::vector<TrackedPose>> perfect;
    for (const auto& f : set.frames) {
      perfect.emplace_back();
      for (const auto& gt : f.annotations) perfect.back().push_back({gt.id + 100, testing::pose_from(gt)});
    }
    const auto r = mota(perfect, set.frames, skeleton);
    CHECK(r.mota == doctest::Approx(1.0));
    CHECK(r.idsw == 0);
    CHECK(r.motp == doctest::Approx(1.0));
    CHECK(r.num_gt == 20);
    CHECK(r.per_frame.size() == 10u);

    const std::vector<std::vector<TrackedPose>> none(10);
    const auto e = mota(none, set.frames, skeleton);
    CHECK(e.mota == doctest::Approx(0.0));
    CHECK(e.fn == 20);

    // Swap the two ids from frame 5 on.
    auto swapped = perfect;
    for (std::size_t t = 5; t < swapped.size(); ++t) std::swap(swapped[t][0].track_id, swapped[t][1].track_id);
    const auto s = mota(swapped, set.frames, skeleton);
    const auto ref = testing::reference_mota(swapped, set.frames, skeleton.sigmas, 0.5);
    CHECK(s.idsw == 2);
    CHECK(ref.idsw == 2);
    CHECK(s.mota == doctest::Approx(ref.mota));
    CHECK(s.mota == doctest::Approx(1.0 - 2.0 / 20.0));
  }

  TEST_CASE("MOTA with no ground truth counts false positives") {
    const auto pair = testing::pair_skeleton();
    std::vector<Scene> frames(1);
    const std::vector<std::vector<TrackedPose>> tracked{
        {{1, testing::pose_from(testing::annotation(1, {{1, 1}, {9, 9}}))}}};
    const auto r = mota(tracked, frames, pair);
    CHECK(r.fp == 1);
    CHECK(r.mota == doctest::Approx(0.0));
  }

  TEST_CASE("property: MOTA equals the reference and ignores prediction order") {
    const auto skeleton = builtin_skeleton("posetrack17");
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
      SceneConfig cfg = few_poses(3);
      cfg.frames = 1 + static_cast<int>(rng() % 6);
      cfg.min_speed = 0.0;
      cfg.max_speed = 5.0;
      const auto set = generate_scene(rng(), cfg, skeleton);
      std::vector<std::vector<TrackedPose>> tracked;
      for (const auto& f : set.frames) {
        tracked.emplace_back();
        for (const auto& gt : f.annotations) {
          if (u(rng) < 0.15) continue;
          const std::int64_t id = u(rng) < 0.2 ? static_cast<std::int64_t>(rng() % 5) + 1 : gt.id;
          tracked.back().push_back({id, jittered(gt, 1.0 + 6.0 * u(rng), 0.1 + 0.9 * u(rng), rng)});
        }
        // Ids unique per frame, as every tracker guarantees.
        std::set<std::int64_t> seen;
        std::erase_if(tracked.back(), [&](const TrackedPose& tp) { return !seen.insert(tp.track_id).second; });
      }
      const auto r = mota(tracked, set.frames, skeleton);
      const auto ref = testing::reference_mota(tracked, set.frames, skeleton.sigmas, 0.5);
      CHECK(static_cast<long>(r.fp) == ref.fp);
      CHECK(static_cast<long>(r.fn) == ref.fn);
      CHECK(static_cast<long>(r.idsw) == ref.idsw);
      CHECK(r.mota == doctest::Approx(ref.mota));
      CHECK(r.mota == doctest::Approx(1.0 - static_cast<double>(r.fp + r.fn + r.idsw) / std::max<std::size_t>(1, r.num_gt)));
      if (set.frames.size() == 1) CHECK(r.idsw == 0);

      auto shuffled = tracked;
      for (auto& f : shuffled) std::shuffle(f.begin(), f.end(), rng);
      const auto p = mota(shuffled, set.frames, skeleton);
      CHECK(p.fp == r.fp);
      CHECK(p.fn == r.fn);
      CHECK(p.idsw == r.idsw);
    }
  }

  TEST_CASE("crowd index") {
    CHECK(crowd_index(box_scene({{0, 0, 100, 100}})) == 0.0);
    CHECK(crowd_index(box_scene({{0, 0, 100, 100}, {0, 0, 100, 100}})) == doctest::Approx(1.0));
    CHECK(crowd_index(box_scene({{0, 0, 100, 100}, {50, 0, 150, 100}})) == doctest::Approx(0.5));
    // A box covered by the union of two others.
    CHECK(crowd_index(box_scene({{0, 0, 100, 100}, {0, 0, 50, 100}, {50, 0, 100, 100}})) ==
          doctest::Approx((1.0 + 1.0 + 1.0) / 3.0));
    CHECK_THROWS_AS(crowd_index(Scene{}), DomainError);

    const std::vector<Scene> scenes{box_scene({{0, 0, 100, 100}}), box_scene({{0, 0, 100, 100}, {50, 0, 150, 100}}),
                                    box_scene({{0, 0, 100, 100}, {0, 0, 100, 100}}), Scene{}};
    const auto split = split_by_crowd_index(scenes);
    CHECK(split.easy == std::vector<std::size_t>{0, 3});
    CHECK(split.medium == std::vector<std::size_t>{1});
    CHECK(split.hard == std::vector<std::size_t>{2});
  }
}
