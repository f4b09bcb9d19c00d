// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/field_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "pifdecode/error.hpp"

namespace pifdecode {

using nlohmann::json;

namespace {

[[noreturn]] void fail(FieldFileErrorKind kind, const std::string& what) {
  throw FieldFileError(kind, "field file: " + what);
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large blocks in chunks.
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t remaining = bytes.size();
  while (remaining > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    remaining -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void append_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

std::string tensor_bytes(const FieldTensor& t) {
  std::string out(t.data().size() * sizeof(float), '\0');
  std::memcpy(out.data(), t.data().data(), out.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < out.size(); i += 4) {
      std::swap(out[i], out[i + 3]);
      std::swap(out[i + 1], out[i + 2]);
    }
  }
  return out;
}

void fill_tensor(FieldTensor& t, std::string_view bytes) {
  std::memcpy(t.data().data(), bytes.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(t.data().data());
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
      std::swap(raw[i], raw[i + 3]);
      std::swap(raw[i + 1], raw[i + 2]);
    }
  }
}

/// Expected field count for a tensor kind, or -1 when the skeleton is not builtin.
int expected_fields(const std::string& skeleton_name, FieldKind kind, int actual) {
  Skeleton s;
  try {
    s = builtin_skeleton(skeleton_name);
  } catch (const NotFoundError&) {
    return -1;
  }
  switch (kind) {
    case FieldKind::cif: return s.num_keypoints();
    case FieldKind::caf: return s.num_edges();
    case FieldKind::tcaf: return s.num_temporal_edges();
    case FieldKind::mask:
      if (actual == s.num_keypoints() || actual == s.num_edges() || actual == s.num_temporal_edges()) {
        return actual;
      }
      return s.num_keypoints();
  }
  return -1;
}

void check_consistent(const FieldFileManifest& m, const NamedTensor& nt) {
  const FieldTensor& t = nt.tensor;
  if (t.stride() != m.stride || !(t.image_size() == m.image_size)) {
    fail(FieldFileErrorKind::shape_mismatch,
         "tensor " + nt.name + " stride/image size differs from the manifest");
  }
  if (t.channels() != channel_count(t.kind())) {
    fail(FieldFileErrorKind::shape_mismatch, "tensor " + nt.name + " has the wrong channel count");
  }
  if (t.height() != grid_extent(m.image_size.height, m.stride) ||
      t.width() != grid_extent(m.image_size.width, m.stride)) {
    fail(FieldFileErrorKind::shape_mismatch, "tensor " + nt.name + " grid does not match image size");
  }
  const int expected = expected_fields(m.skeleton, t.kind(), t.fields());
  if (expected >= 0 && expected != t.fields()) {
    fail(FieldFileErrorKind::shape_mismatch, "tensor " + nt.name + " has " +
                                                 std::to_string(t.fields()) + " fields, skeleton " +
                                                 m.skeleton + " implies " + std::to_string(expected));
  }
}

void check_manifest(const FieldFileManifest& m) {
  if (m.stride <= 0) fail(FieldFileErrorKind::invalid_manifest, "stride must be positive");
  if (m.image_size.width <= 0 || m.image_size.height <= 0) {
    fail(FieldFileErrorKind::invalid_manifest, "image size must be positive");
  }
}

}  // namespace

const FieldTensor* FieldFile::find(FieldKind kind) const {
  for (const auto& t : tensors) {
    if (t.tensor.kind() == kind) return &t.tensor;
  }
  return nullptr;
}

const FieldTensor* FieldFile::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

std::string serialize_field_file(const FieldFile& file) {
  const auto& m = file.manifest;
  check_manifest(m);
  json doc;
  doc["format"] = kFieldFileFormat;
  doc["version"] = kFieldFileVersion;
  doc["skeleton"] = m.skeleton;
  doc["stride"] = m.stride;
  doc["image_size"] = {m.image_size.width, m.image_size.height};
  doc["frame"] = m.frame;
  try {
    doc["config"] = m.config_json.empty() ? json::object() : json::parse(m.config_json);
  } catch (const json::exception&) {
    fail(FieldFileErrorKind::invalid_manifest, "config is not a JSON document");
  }
  doc["tensors"] = json::array();

  std::vector<std::string> blocks;
  for (const auto& nt : file.tensors) {
    check_consistent(m, nt);
    blocks.push_back(tensor_bytes(nt.tensor));
    const auto shape = nt.tensor.shape();
    doc["tensors"].push_back({
        {"name", nt.name},
        {"kind", to_string(nt.tensor.kind())},
        {"shape", {shape[0], shape[1], shape[2], shape[3]}},
        {"frame", nt.tensor.frame()},
        {"bytes", blocks.back().size()},
        {"crc32", crc32_of(blocks.back())},
    });
  }
  const std::string manifest = doc.dump();
  std::string out;
  append_u64_le(out, manifest.size());
  out += manifest;
  for (const auto& b : blocks) out += b;
  return out;
}

FieldFile parse_field_file(std::string_view bytes) {
  if (bytes.size() < 8) fail(FieldFileErrorKind::truncated, "missing manifest length");
  const std::uint64_t manifest_size = read_u64_le(bytes);
  bytes.remove_prefix(8);
  if (manifest_size > bytes.size()) fail(FieldFileErrorKind::truncated, "manifest extends past end of file");

  json doc;
  try {
    doc = json::parse(bytes.substr(0, manifest_size));
  } catch (const json::exception& ex) {
    fail(FieldFileErrorKind::invalid_manifest, std::string("manifest is not JSON: ") + ex.what());
  }
  bytes.remove_prefix(manifest_size);

  FieldFile file;
  std::vector<std::tuple<std::uint64_t, std::uint32_t>> blocks;
  try {
    if (doc.at("format").get<std::string>() != kFieldFileFormat) {
      fail(FieldFileErrorKind::invalid_manifest, "unexpected format tag");
    }
    if (doc.at("version").get<int>() != kFieldFileVersion) {
      fail(FieldFileErrorKind::invalid_manifest, "unsupported version");
    }
    auto& m = file.manifest;
    m.skeleton = doc.at("skeleton").get<std::string>();
    m.stride = doc.at("stride").get<int>();
    m.image_size = {doc.at("image_size").at(0).get<int>(), doc.at("image_size").at(1).get<int>()};
    m.frame = doc.at("frame").get<std::int64_t>();
    m.config_json = doc.value("config", json::object()).dump();
    check_manifest(m);

    for (const auto& entry : doc.at("tensors")) {
      const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
      if (shape.size() != 4) fail(FieldFileErrorKind::invalid_manifest, "tensor shape must have rank 4");
      for (auto d : shape) {
        if (d < 0 || d > (1 << 24)) fail(FieldFileErrorKind::invalid_manifest, "tensor dimension out of range");
      }
      const FieldKind kind = parse_field_kind(entry.at("kind").get<std::string>());
      if (shape[0] != channel_count(kind)) {
        fail(FieldFileErrorKind::shape_mismatch, "channel count does not match tensor kind");
      }
      NamedTensor nt{entry.at("name").get<std::string>(),
                     FieldTensor(kind, static_cast<int>(shape[1]), static_cast<int>(shape[2]),
                                 static_cast<int>(shape[3]), m.stride, m.image_size,
                                 entry.value("frame", m.frame))};
      const auto nbytes = entry.at("bytes").get<std::uint64_t>();
      if (nbytes != nt.tensor.data().size() * sizeof(float)) {
        fail(FieldFileErrorKind::shape_mismatch, "block size of " + nt.name + " disagrees with its shape");
      }
      check_consistent(m, nt);
      blocks.emplace_back(nbytes, entry.at("crc32").get<std::uint32_t>());
      file.tensors.push_back(std::move(nt));
    }
  } catch (const json::exception& ex) {
    fail(FieldFileErrorKind::invalid_manifest, std::string("malformed manifest: ") + ex.what());
  } catch (const FormatError& ex) {
    fail(FieldFileErrorKind::invalid_manifest, ex.what());
  } catch (const ShapeError& ex) {
    fail(FieldFileErrorKind::invalid_manifest, ex.what());
  }

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto [nbytes, crc] = blocks[i];
    if (nbytes > bytes.size()) fail(FieldFileErrorKind::truncated, "tensor block extends past end of file");
    const auto block = bytes.substr(0, nbytes);
    if (crc32_of(block) != crc) {
      fail(FieldFileErrorKind::checksum_mismatch, "CRC-32 mismatch in tensor " + file.tensors[i].name);
    }
    fill_tensor(file.tensors[i].tensor, block);
    bytes.remove_prefix(nbytes);
  }
  if (!bytes.empty()) fail(FieldFileErrorKind::invalid_manifest, "trailing bytes after last tensor");
  return file;
}

void write_field_file(const std::string& path, const FieldFile& file) {
  const std::string bytes = serialize_field_file(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(FieldFileErrorKind::io, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(FieldFileErrorKind::io, "write to " + path + " failed");
}

FieldFile read_field_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(FieldFileErrorKind::io, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_field_file(bytes);
}

}  // namespace pifdecode
