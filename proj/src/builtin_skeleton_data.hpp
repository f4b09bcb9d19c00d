// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string_view>
#include <utility>

namespace pifdecode::detail {

/// (name, JSON text) of every file in data/skeletons, generated at configure time.
std::span<const std::pair<std::string_view, std::string_view>> builtin_skeleton_data();

}  // namespace pifdecode::detail
