// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pifdecode/error.hpp"

namespace pifdecode {

double oks(const Pose& pred, const GroundTruthAnnotation& gt, const Skeleton& skeleton, double area) {
  if (!(area > 0.0)) throw DomainError("OKS area must be positive");
  if (pred.keypoints.size() != gt.keypoints.size() ||
      static_cast<int>(gt.keypoints.size()) != skeleton.num_keypoints()) {
    throw ShapeError("pose, annotation and skeleton keypoint counts differ");
  }
  double sum = 0.0;
  int labeled = 0;
  for (std::size_t i = 0; i < gt.keypoints.size(); ++i) {
    const auto& g = gt.keypoints[i];
    if (!g.labeled()) continue;
    ++labeled;
    const auto& p = pred.keypoints[i];
    if (!p.detected()) continue;
    const double k = 2.0 * skeleton.sigmas[i];
    const double dx = p.x - g.x;
    const double dy = p.y - g.y;
    sum += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k * k));
  }
  if (labeled == 0) throw DomainError("OKS needs at least one labeled ground-truth keypoint");
  return sum / labeled;
}

double oks(const Pose& pred, const GroundTruthAnnotation& gt, const Skeleton& skeleton) {
  return oks(pred, gt, skeleton, gt.area());
}

std::vector<double> default_oks_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

namespace {

double pose_area(const Pose& pose) {
  const auto box = pose.bbox();
  return box ? std::max(1.0, box->area()) : 0.0;
}

struct Detection {
  double score;
  std::size_t image;
  std::size_t rank;  // position within the image, for a stable global order
};

/// Per-threshold matching outcome of one detection: 1 TP, 0 FP, -1 ignored.
std::vector<ThresholdResult> evaluate(std::span<const std::vector<Pose>> predictions,
                                      std::span<const std::vector<GroundTruthAnnotation>> ground_truth,
                                      const Skeleton& skeleton, AreaRange range, std::span<const double> thresholds,
                                      std::size_t& num_gt, std::size_t& num_predictions) {
  if (predictions.size() != ground_truth.size()) {
    throw ShapeError("predictions and ground truth cover a different number of images");
  }
  auto in_range = [&](double area) { return area >= range.min && area <= range.max; };

  // Top detections per image, in score order.
  std::vector<std::vector<std::size_t>> kept(predictions.size());
  std::vector<Detection> detections;
  num_gt = 0;
  for (std::size_t img = 0; img < predictions.size(); ++img) {
    auto& order = kept[img];
    for (std::size_t p = 0; p < predictions[img].size(); ++p) order.push_back(p);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return predictions[img][a].score > predictions[img][b].score;
    });
    if (order.size() > static_cast<std::size_t>(kMaxDetectionsPerImage)) order.resize(kMaxDetectionsPerImage);
    for (std::size_t r = 0; r < order.size(); ++r) detections.push_back({predictions[img][order[r]].score, img, r});
    for (const auto& g : ground_truth[img]) {
      if (g.num_labeled() > 0 && in_range(g.area())) ++num_gt;
    }
  }
  num_predictions = detections.size();
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  // OKS tables per image: [rank][gt].
  std::vector<std::vector<std::vector<double>>> table(predictions.size());
  for (std::size_t img = 0; img < predictions.size(); ++img) {
    const auto& gts = ground_truth[img];
    for (std::size_t idx : kept[img]) {
      std::vector<double> row;
      for (const auto& g : gts) {
        row.push_back(g.num_labeled() > 0 ? oks(predictions[img][idx], g, skeleton) : 0.0);
      }
      table[img].push_back(std::move(row));
    }
  }

  std::vector<ThresholdResult> results;
  for (double threshold : thresholds) {
    std::vector<std::vector<int>> status(predictions.size());  // per image, per rank
    for (std::size_t img = 0; img < predictions.size(); ++img) {
      const auto& gts = ground_truth[img];
      std::vector<bool> gt_ignored(gts.size());
      for (std::size_t g = 0; g < gts.size(); ++g) gt_ignored[g] = gts[g].num_labeled() == 0 || !in_range(gts[g].area());
      std::vector<bool> taken(gts.size(), false);
      for (std::size_t r = 0; r < kept[img].size(); ++r) {
        // Prefer the best unmatched counted ground truth, then fall back to ignored ones.
        int best = -1;
        double best_oks = threshold;
        for (int pass = 0; pass < 2 && best < 0; ++pass) {
          for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g] || gt_ignored[g] != (pass == 1) || gts[g].num_labeled() == 0) continue;
            const double o = table[img][r][g];
            if (o >= best_oks && (best < 0 || o > best_oks)) {
              best = static_cast<int>(g);
              best_oks = o;
            }
          }
        }
        int s;
        if (best >= 0) {
          taken[static_cast<std::size_t>(best)] = true;
          s = gt_ignored[static_cast<std::size_t>(best)] ? -1 : 1;
        } else {
          s = in_range(pose_area(predictions[img][kept[img][r]])) ? 0 : -1;
        }
        status[img].push_back(s);
      }
    }

    ThresholdResult res;
    res.threshold = threshold;
    std::vector<double> recall, precision;
    double tp = 0.0, fp = 0.0;
    for (const auto& d : detections) {
      const int s = status[d.image][d.rank];
      if (s < 0) continue;
      (s == 1 ? tp : fp) += 1.0;
      recall.push_back(num_gt > 0 ? tp / static_cast<double>(num_gt) : 0.0);
      precision.push_back(tp / (tp + fp));
    }
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    res.precision.assign(101, 0.0);
    std::size_t j = 0;
    for (int i = 0; i <= 100; ++i) {
      const double r = i / 100.0;
      while (j < recall.size() && recall[j] < r - 1e-12) ++j;
      if (j < recall.size()) res.precision[static_cast<std::size_t>(i)] = precision[j];
    }
    double sum = 0.0;
    for (double p : res.precision) sum += p;
    res.ap = num_gt > 0 ? sum / 101.0 : 0.0;
    res.recall = recall.empty() ? 0.0 : recall.back();
    results.push_back(std::move(res));
  }
  return results;
}

ApReport summarize(std::vector<ThresholdResult> per_threshold, std::size_t num_gt, std::size_t num_predictions) {
  ApReport report;
  report.num_gt = num_gt;
  report.num_predictions = num_predictions;
  double ap = 0.0, ar = 0.0;
  for (const auto& t : per_threshold) {
    ap += t.ap;
    ar += t.recall;
    if (std::abs(t.threshold - 0.5) < 1e-9) report.ap50 = t.ap;
    if (std::abs(t.threshold - 0.75) < 1e-9) report.ap75 = t.ap;
  }
  if (!per_threshold.empty()) {
    report.ap = ap / static_cast<double>(per_threshold.size());
    report.ar = ar / static_cast<double>(per_threshold.size());
  }
  report.per_threshold = std::move(per_threshold);
  return report;
}

}  // namespace

std::optional<ApReport> average_precision_in_range(std::span<const std::vector<Pose>> predictions,
                                                   std::span<const std::vector<GroundTruthAnnotation>> ground_truth,
                                                   const Skeleton& skeleton, AreaRange range,
                                                   std::span<const double> thresholds) {
  const auto defaults = default_oks_thresholds();
  if (thresholds.empty()) thresholds = defaults;
  std::size_t num_gt = 0, num_predictions = 0;
  auto results = evaluate(predictions, ground_truth, skeleton, range, thresholds, num_gt, num_predictions);
  if (num_gt == 0) return std::nullopt;
  return summarize(std::move(results), num_gt, num_predictions);
}

ApReport average_precision(std::span<const std::vector<Pose>> predictions,
                           std::span<const std::vector<GroundTruthAnnotation>> ground_truth, const Skeleton& skeleton,
                           std::span<const double> thresholds) {
  const auto defaults = default_oks_thresholds();
  if (thresholds.empty()) thresholds = defaults;
  std::size_t num_gt = 0, num_predictions = 0;
  auto results = evaluate(predictions, ground_truth, skeleton, {}, thresholds, num_gt, num_predictions);
  ApReport report = summarize(std::move(results), num_gt, num_predictions);
  if (auto m = average_precision_in_range(predictions, ground_truth, skeleton, {32.0 * 32.0, 96.0 * 96.0}, thresholds)) {
    report.ap_medium = m->ap;
  }
  if (auto l = average_precision_in_range(predictions, ground_truth, skeleton, {96.0 * 96.0, 1e12}, thresholds)) {
    report.ap_large = l->ap;
  }
  return report;
}

MotReport mota(std::span<const std::vector<TrackedPose>> tracked, std::span<const Scene> ground_truth,
               const Skeleton& skeleton, double match_threshold) {
  if (tracked.size() != ground_truth.size()) throw ShapeError("tracked frames and ground-truth frames differ");
  MotReport report;
  std::map<std::int64_t, std::int64_t> last_track;  // gt id -> track id of its latest match
  double oks_sum = 0.0;

  for (std::size_t f = 0; f < tracked.size(); ++f) {
    const auto& preds = tracked[f];
    const auto& gts = ground_truth[f].annotations;
    FrameMot fm;
    fm.frame = ground_truth[f].frame;
    fm.gt = gts.size();

    std::vector<std::vector<double>> sim(preds.size(), std::vector<double>(gts.size(), 0.0));
    for (std::size_t p = 0; p < preds.size(); ++p) {
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gts[g].num_labeled() > 0) sim[p][g] = oks(preds[p].pose, gts[g], skeleton);
      }
    }
    std::vector<int> pred_of_gt(gts.size(), -1);
    std::vector<bool> pred_used(preds.size(), false);

    // Keep valid correspondences from earlier frames.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      auto it = last_track.find(gts[g].id);
      if (it == last_track.end()) continue;
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (pred_used[p] || preds[p].track_id != it->second) continue;
        if (sim[p][g] >= match_threshold) {
          pred_of_gt[g] = static_cast<int>(p);
          pred_used[p] = true;
        }
        break;
      }
    }

    // Greedy matching of the rest by prediction score.
    std::vector<std::size_t> order(preds.size());
    for (std::size_t p = 0; p < preds.size(); ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].pose.score > preds[b].pose.score; });
    for (std::size_t p : order) {
      if (pred_used[p]) continue;
      int best = -1;
      double best_sim = match_threshold;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (pred_of_gt[g] >= 0) continue;
        if (sim[p][g] >= best_sim && (best < 0 || sim[p][g] > best_sim)) {
          best = static_cast<int>(g);
          best_sim = sim[p][g];
        }
      }
      if (best < 0) continue;
      pred_of_gt[static_cast<std::size_t>(best)] = static_cast<int>(p);
      pred_used[p] = true;
    }

    for (std::size_t g = 0; g < gts.size(); ++g) {
      const int p = pred_of_gt[g];
      if (p < 0) {
        ++fm.fn;
        continue;
      }
      ++fm.matches;
      oks_sum += sim[static_cast<std::size_t>(p)][g];
      const std::int64_t track = preds[static_cast<std::size_t>(p)].track_id;
      auto it = last_track.find(gts[g].id);
      if (it != last_track.end() && it->second != track) ++fm.idsw;
      last_track[gts[g].id] = track;
    }
    for (bool used : pred_used) {
      if (!used) ++fm.fp;
    }

    report.fp += fm.fp;
    report.fn += fm.fn;
    report.idsw += fm.idsw;
    report.num_gt += fm.gt;
    report.matches += fm.matches;
    report.per_frame.push_back(fm);
  }
  const double errors = static_cast<double>(report.fp + report.fn + report.idsw);
  report.mota = 1.0 - errors / static_cast<double>(std::max<std::size_t>(1, report.num_gt));
  report.motp = report.matches > 0 ? oks_sum / static_cast<double>(report.matches) : 0.0;
  return report;
}

double crowd_index(const Scene& scene) {
  std::vector<Box> boxes;
  for (const auto& a : scene.annotations) {
    if (auto b = a.bbox()) boxes.push_back(*b);
  }
  if (boxes.empty()) throw DomainError("crowd index needs at least one instance");
  double total = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box& bi = boxes[i];
    if (!(bi.area() > 0.0)) continue;
    // Coordinate compression of every box edge inside box i.
    std::vector<double> xs{bi.x0, bi.x1}, ys{bi.y0, bi.y1};
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (j == i) continue;
      for (double x : {boxes[j].x0, boxes[j].x1}) {
        if (x > bi.x0 && x < bi.x1) xs.push_back(x);
      }
      for (double y : {boxes[j].y0, boxes[j].y1}) {
        if (y > bi.y0 && y < bi.y1) ys.push_back(y);
      }
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double covered = 0.0;
    for (std::size_t a = 0; a + 1 < xs.size(); ++a) {
      for (std::size_t b = 0; b + 1 < ys.size(); ++b) {
        const double cx = 0.5 * (xs[a] + xs[a + 1]);
        const double cy = 0.5 * (ys[b] + ys[b + 1]);
        for (std::size_t j = 0; j < boxes.size(); ++j) {
          if (j != i && cx > boxes[j].x0 && cx < boxes[j].x1 && cy > boxes[j].y0 && cy < boxes[j].y1) {
            covered += (xs[a + 1] - xs[a]) * (ys[b + 1] - ys[b]);
            break;
          }
        }
      }
    }
    total += covered / bi.area();
  }
  return total / static_cast<double>(boxes.size());
}

CrowdIndexSplit split_by_crowd_index(std::span<const Scene> scenes) {
  CrowdIndexSplit out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    bool any = false;
    for (const auto& a : scenes[i].annotations) any = any || a.bbox().has_value();
    const double ci = any ? crowd_index(scenes[i]) : 0.0;
    if (ci <= 0.1) {
      out.easy.push_back(i);
    } else if (ci <= 0.8) {
      out.medium.push_back(i);
    } else {
      out.hard.push_back(i);
    }
  }
  return out;
}

}  // namespace pifdecode
