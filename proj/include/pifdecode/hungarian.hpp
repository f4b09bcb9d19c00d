// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace pifdecode {

/// Minimum-cost assignment on a rows x cols cost matrix (row-major). Every
/// row is assigned when rows <= cols, otherwise every column. Returns the
/// column of each row or -1. O(n^3).
std::vector<int> hungarian_assign(const std::vector<double>& cost, int rows, int cols);

/// Total cost of an assignment returned by hungarian_assign.
double assignment_cost(const std::vector<double>& cost, int cols, const std::vector<int>& assignment);

}  // namespace pifdecode
