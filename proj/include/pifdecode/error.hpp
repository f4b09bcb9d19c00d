// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pifdecode {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of a numeric function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes disagree with each other or with a skeleton.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class EncodeOutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class GenerationFailedError : public Error {
 public:
  using Error::Error;
};

/// Frames were fed to the tracker out of order.
class SequenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable JSON documents (scenes, skeletons, poses, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

enum class FieldFileErrorKind {
  io,
  truncated,
  checksum_mismatch,
  shape_mismatch,
  invalid_manifest,
};

class FieldFileError : public Error {
 public:
  FieldFileError(FieldFileErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  FieldFileErrorKind kind() const noexcept { return kind_; }

 private:
  FieldFileErrorKind kind_;
};

}  // namespace pifdecode
