// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pifdecode/cli.hpp"
#include "pifdecode/error.hpp"

namespace pifdecode::cli {

TimingStat timing_stat(std::vector<double> samples) {
  if (samples.empty()) return {};
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  TimingStat s;
  s.median_ms = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  if (n == 1) s.p95_ms = s.median_ms;
  return s;
}

BenchReport bench_decode(const std::vector<FieldTensor>& cifs, const std::vector<FieldTensor>& cafs,
                         const Skeleton& skeleton, const DecoderConfig& config, int repetitions) {
  if (cifs.size() != cafs.size()) throw ShapeError("bench needs one CAF per CIF");
  if (repetitions < 1) throw DomainError("repetitions must be >= 1");
  BenchReport report;
  report.frames = cifs.size();
  report.repetitions = repetitions;
  std::vector<double> accumulate, seeds, growth, nms;
  for (std::size_t i = 0; i < cifs.size(); ++i) {
    for (int r = 0; r < repetitions; ++r) {
      DecodeProfile profile;
      const auto start = std::chrono::steady_clock::now();
      const auto poses = decode_frame(cifs[i], cafs[i], skeleton, config, &profile);
      const auto stop = std::chrono::steady_clock::now();
      report.total_samples_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
      accumulate.push_back(profile.accumulate_ms);
      seeds.push_back(profile.seeds_ms);
      growth.push_back(profile.growth_ms);
      nms.push_back(profile.nms_ms);
    }
  }
  report.total = timing_stat(report.total_samples_ms);
  report.accumulate = timing_stat(std::move(accumulate));
  report.seeds = timing_stat(std::move(seeds));
  report.growth = timing_stat(std::move(growth));
  report.nms = timing_stat(std::move(nms));
  return report;
}

BenchFieldset synthetic_bench_fieldset(std::uint64_t seed, int frames, int instances) {
  BenchFieldset out;
  out.skeleton = builtin_skeleton("coco17");
  SceneConfig sc;
  sc.image_size = {801, 801};
  sc.min_poses = instances;
  sc.max_poses = instances;
  sc.min_height = 60.0;
  sc.max_height = 120.0;
  sc.margin = 4.0;
  EncoderConfig ec;
  ec.stride = 8;
  for (int f = 0; f < frames; ++f) {
    const SceneSet set = generate_scene(seed + static_cast<std::uint64_t>(f), sc, out.skeleton);
    out.cifs.push_back(encode_cif(set.frames.front(), out.skeleton, ec).field);
    out.cafs.push_back(encode_caf(set.frames.front(), out.skeleton, ec).field);
  }
  return out;
}

}  // namespace pifdecode::cli
