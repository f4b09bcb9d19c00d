// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pifdecode/model.hpp"

namespace pifdecode {

enum class FieldKind { cif, caf, tcaf, mask };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view text);

/// Channel layout of a CIF cell: {c, x, y, b, sigma}.
namespace cif_channel {
inline constexpr int c = 0;
inline constexpr int x = 1;
inline constexpr int y = 2;
inline constexpr int b = 3;
inline constexpr int sigma = 4;
inline constexpr int count = 5;
}  // namespace cif_channel

/// Channel layout of a CAF or TCAF cell: {c, x1, y1, x2, y2, b1, b2, sigma1, sigma2}.
namespace caf_channel {
inline constexpr int c = 0;
inline constexpr int x1 = 1;
inline constexpr int y1 = 2;
inline constexpr int x2 = 3;
inline constexpr int y2 = 4;
inline constexpr int b1 = 5;
inline constexpr int b2 = 6;
inline constexpr int sigma1 = 7;
inline constexpr int sigma2 = 8;
inline constexpr int count = 9;
}  // namespace caf_channel

/// Loss masks stored as 0/1 planes: {m_c, m_v, m_s}.
namespace mask_channel {
inline constexpr int confidence = 0;
inline constexpr int localization = 1;
inline constexpr int scale = 2;
inline constexpr int count = 3;
}  // namespace mask_channel

int channel_count(FieldKind kind);

/// Number of grid cells covering `image_extent` pixels at `stride`.
/// Cell i is centered on pixel i * stride.
inline int grid_extent(int image_extent, int stride) { return (image_extent - 1) / stride + 1; }

/// A composite field: channels x fields x height x width float32 values in C order.
///
/// Regression channels hold absolute image coordinates in pixels, so a tensor
/// can be interpreted without knowing which cell produced a value.
class FieldTensor {
 public:
  FieldTensor() = default;
  FieldTensor(FieldKind kind, int fields, int height, int width, int stride, ImageSize image_size,
              std::int64_t frame = 0);

  /// Tensor with the grid size implied by `image_size` and `stride`.
  static FieldTensor for_image(FieldKind kind, int fields, ImageSize image_size, int stride,
                               std::int64_t frame = 0);

  FieldKind kind() const { return kind_; }
  int channels() const { return channels_; }
  int fields() const { return fields_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int stride() const { return stride_; }
  ImageSize image_size() const { return image_size_; }
  std::int64_t frame() const { return frame_; }
  void set_frame(std::int64_t frame) { frame_ = frame; }
  std::array<std::int64_t, 4> shape() const { return {channels_, fields_, height_, width_}; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

  float at(int channel, int field, int y, int x) const { return data_[index(channel, field, y, x)]; }
  float& at(int channel, int field, int y, int x) { return data_[index(channel, field, y, x)]; }

  std::span<const float> plane(int channel, int field) const {
    return {data_.data() + index(channel, field, 0, 0), plane_size()};
  }
  std::span<float> plane(int channel, int field) {
    return {data_.data() + index(channel, field, 0, 0), plane_size()};
  }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  friend bool operator==(const FieldTensor&, const FieldTensor&) = default;

 private:
  std::size_t index(int channel, int field, int y, int x) const {
    return ((static_cast<std::size_t>(channel) * fields_ + field) * height_ + y) * width_ + x;
  }

  FieldKind kind_ = FieldKind::cif;
  int channels_ = 0;
  int fields_ = 0;
  int height_ = 0;
  int width_ = 0;
  int stride_ = 1;
  ImageSize image_size_;
  std::int64_t frame_ = 0;
  std::vector<float> data_;
};

/// Default high-resolution stride: a quarter of the field stride.
inline double default_hr_stride(int stride) { return stride >= 4 ? stride / 4.0 : 1.0; }

/// Per-keypoint confidence map at high resolution. Node (i, j) sits at pixel
/// (j * hr_stride, i * hr_stride).
class HrMap {
 public:
  HrMap() = default;
  HrMap(int keypoints, ImageSize image_size, double hr_stride);

  int keypoints() const { return keypoints_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double hr_stride() const { return hr_stride_; }
  ImageSize image_size() const { return image_size_; }

  float node(int keypoint, int iy, int ix) const { return values_[index(keypoint, iy, ix)]; }
  float& node(int keypoint, int iy, int ix) { return values_[index(keypoint, iy, ix)]; }
  std::span<const float> plane(int keypoint) const {
    return {values_.data() + index(keypoint, 0, 0), static_cast<std::size_t>(width_) * height_};
  }

  /// Bilinear interpolation, clamped at the grid border; 0 outside the image.
  double value_at(int keypoint, double x, double y) const;

 private:
  std::size_t index(int keypoint, int iy, int ix) const {
    return (static_cast<std::size_t>(keypoint) * height_ + iy) * width_ + ix;
  }

  int keypoints_ = 0;
  int width_ = 0;
  int height_ = 0;
  double hr_stride_ = 1.0;
  ImageSize image_size_;
  std::vector<float> values_;
};

struct HrConfig {
  double hr_stride = 0.0;       // <= 0 selects default_hr_stride(cif.stride())
  double cutoff_sigmas = 3.0;   // kernel truncation radius in units of sigma
};

/// Accumulates every CIF cell with confidence above `conf_threshold` into
/// f_J(v, w) = sum c * exp(-((v - x)^2 + (w - y)^2) / (2 sigma^2)).
HrMap cif_hr_accumulate(const FieldTensor& cif, double conf_threshold, const HrConfig& config = {});

inline double hr_value_at(const HrMap& hr, int keypoint, double x, double y) {
  return hr.value_at(keypoint, x, y);
}

}  // namespace pifdecode
