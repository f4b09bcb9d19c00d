// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pifdecode/fields.hpp"

namespace pifdecode {

inline constexpr std::string_view kFieldFileFormat = "pifdecode.fieldfile";
inline constexpr int kFieldFileVersion = 1;

struct FieldFileManifest {
  std::string skeleton;
  int stride = 0;
  ImageSize image_size;
  std::int64_t frame = 0;
  /// Serialized JSON object with the effective configuration that produced
  /// the file; empty means {}.
  std::string config_json;
};

struct NamedTensor {
  std::string name;
  FieldTensor tensor;
};

/// Container of field tensors for one frame.
///
/// On disk: a little-endian uint64 byte count, the UTF-8 JSON manifest, then
/// one raw float32 little-endian block per tensor in manifest order. The
/// manifest records shape and CRC-32 of every block.
struct FieldFile {
  FieldFileManifest manifest;
  std::vector<NamedTensor> tensors;

  /// First tensor of the given kind, or nullptr.
  const FieldTensor* find(FieldKind kind) const;
  const FieldTensor* find(std::string_view name) const;
};

std::string serialize_field_file(const FieldFile& file);
FieldFile parse_field_file(std::string_view bytes);

void write_field_file(const std::string& path, const FieldFile& file);
FieldFile read_field_file(const std::string& path);

}  // namespace pifdecode
