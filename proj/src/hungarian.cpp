// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

#include "pifdecode/hungarian.hpp"

#include <cmath>
#include <limits>

#include "pifdecode/error.hpp"

namespace pifdecode {

namespace {

/// Shortest augmenting path with potentials; requires n <= m.
/// a is 1-based: a[i][j] for i in [1, n], j in [1, m].
std::vector<int> solve(const std::vector<std::vector<double>>& a, int n, int m) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<int> hungarian_assign(const std::vector<double>& cost, int rows, int cols) {
  if (rows < 0 || cols < 0 || cost.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("cost matrix size does not match its dimensions");
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw DomainError("assignment costs must be finite");
  }
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  const bool transpose = rows > cols;
  const int n = transpose ? cols : rows;
  const int m = transpose ? rows : cols;
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(m + 1, 0.0));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double value = cost[static_cast<std::size_t>(r) * cols + c];
      if (transpose) {
        a[c + 1][r + 1] = value;
      } else {
        a[r + 1][c + 1] = value;
      }
    }
  }
  const auto small = solve(a, n, m);
  if (!transpose) return small;
  std::vector<int> out(rows, -1);
  for (int c = 0; c < cols; ++c) {
    if (small[c] >= 0) out[small[c]] = c;
  }
  return out;
}

double assignment_cost(const std::vector<double>& cost, int cols, const std::vector<int>& assignment) {
  double total = 0.0;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] >= 0) total += cost[r * cols + assignment[r]];
  }
  return total;
}

}  // namespace pifdecode
