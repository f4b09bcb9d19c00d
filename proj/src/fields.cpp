// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/fields.hpp"

#include <algorithm>
#include <cmath>

#include "pifdecode/error.hpp"

namespace pifdecode {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::cif: return "cif";
    case FieldKind::caf: return "caf";
    case FieldKind::tcaf: return "tcaf";
    case FieldKind::mask: return "mask";
  }
  return "unknown";
}

FieldKind parse_field_kind(std::string_view text) {
  if (text == "cif") return FieldKind::cif;
  if (text == "caf") return FieldKind::caf;
  if (text == "tcaf") return FieldKind::tcaf;
  if (text == "mask") return FieldKind::mask;
  throw FormatError("unknown field kind: " + std::string(text));
}

int channel_count(FieldKind kind) {
  switch (kind) {
    case FieldKind::cif: return cif_channel::count;
    case FieldKind::caf:
    case FieldKind::tcaf: return caf_channel::count;
    case FieldKind::mask: return mask_channel::count;
  }
  return 0;
}

FieldTensor::FieldTensor(FieldKind kind, int fields, int height, int width, int stride,
                         ImageSize image_size, std::int64_t frame)
    : kind_(kind),
      channels_(channel_count(kind)),
      fields_(fields),
      height_(height),
      width_(width),
      stride_(stride),
      image_size_(image_size),
      frame_(frame) {
  if (fields < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
  if (stride <= 0) throw ShapeError("stride must be positive");
  data_.assign(static_cast<std::size_t>(channels_) * fields_ * height_ * width_, 0.0f);
}

FieldTensor FieldTensor::for_image(FieldKind kind, int fields, ImageSize image_size, int stride,
                                   std::int64_t frame) {
  if (stride <= 0) throw ShapeError("stride must be positive");
  if (image_size.width <= 0 || image_size.height <= 0) throw ShapeError("empty image");
  return FieldTensor(kind, fields, grid_extent(image_size.height, stride),
                     grid_extent(image_size.width, stride), stride, image_size, frame);
}

HrMap::HrMap(int keypoints, ImageSize image_size, double hr_stride)
    : keypoints_(keypoints), hr_stride_(hr_stride), image_size_(image_size) {
  if (!(hr_stride > 0.0)) throw ShapeError("hr_stride must be positive");
  width_ = static_cast<int>(std::floor((image_size.width - 1) / hr_stride)) + 1;
  height_ = static_cast<int>(std::floor((image_size.height - 1) / hr_stride)) + 1;
  values_.assign(static_cast<std::size_t>(keypoints_) * width_ * height_, 0.0f);
}

double HrMap::value_at(int keypoint, double x, double y) const {
  if (keypoint < 0 || keypoint >= keypoints_ || !image_size_.contains(x, y)) return 0.0;
  const double gx = std::clamp(x / hr_stride_, 0.0, static_cast<double>(width_ - 1));
  const double gy = std::clamp(y / hr_stride_, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(gx);
  const int y0 = static_cast<int>(gy);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = gx - x0;
  const double fy = gy - y0;
  const double top = node(keypoint, y0, x0) * (1.0 - fx) + node(keypoint, y0, x1) * fx;
  const double bottom = node(keypoint, y1, x0) * (1.0 - fx) + node(keypoint, y1, x1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

HrMap cif_hr_accumulate(const FieldTensor& cif, double conf_threshold, const HrConfig& config) {
  if (cif.kind() != FieldKind::cif) throw ShapeError("cif_hr_accumulate expects a CIF tensor");
  const double hr_stride = config.hr_stride > 0.0 ? config.hr_stride : default_hr_stride(cif.stride());
  HrMap hr(cif.fields(), cif.image_size(), hr_stride);
  std::vector<double> row;

  for (int k = 0; k < cif.fields(); ++k) {
    const auto conf = cif.plane(cif_channel::c, k);
    const auto xs = cif.plane(cif_channel::x, k);
    const auto ys = cif.plane(cif_channel::y, k);
    const auto sigmas = cif.plane(cif_channel::sigma, k);
    for (std::size_t i = 0; i < conf.size(); ++i) {
      const double c = conf[i];
      if (!(c > conf_threshold)) continue;
      const double sigma = sigmas[i];
      if (!(sigma > 0.0)) continue;
      const double cx = xs[i];
      const double cy = ys[i];
      const double radius = config.cutoff_sigmas * sigma;
      const double radius2 = radius * radius;
      const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

      const int ix0 = std::max(0, static_cast<int>(std::ceil((cx - radius) / hr_stride)));
      const int ix1 = std::min(hr.width() - 1, static_cast<int>(std::floor((cx + radius) / hr_stride)));
      const int iy0 = std::max(0, static_cast<int>(std::ceil((cy - radius) / hr_stride)));
      const int iy1 = std::min(hr.height() - 1, static_cast<int>(std::floor((cy + radius) / hr_stride)));
      // The kernel is separable; precompute the row factors once per cell.
      row.clear();
      for (int ix = ix0; ix <= ix1; ++ix) {
        const double dx = ix * hr_stride - cx;
        row.push_back(std::exp(-dx * dx * inv_two_sigma2));
      }
      for (int iy = iy0; iy <= iy1; ++iy) {
        const double dy = iy * hr_stride - cy;
        const double dy2 = dy * dy;
        if (dy2 > radius2) continue;
        const double wy = c * std::exp(-dy2 * inv_two_sigma2);
        float* out = &hr.node(k, iy, 0);
        for (int ix = ix0; ix <= ix1; ++ix) {
          const double dx = ix * hr_stride - cx;
          if (dx * dx + dy2 > radius2) continue;
          out[ix] += static_cast<float>(wy * row[static_cast<std::size_t>(ix - ix0)]);
        }
      }
    }
  }
  return hr;
}

}  // namespace pifdecode
