/*
 * Copyright 2026 The cyclosync Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "cyclosync/error.hpp"
#include "cyclosync/parallel.hpp"
#include "cyclosync/sync_matrix.hpp"

namespace cyclosync {

/// Longest allowed run of consecutive vertical (or horizontal) steps.
inline constexpr int kMaxRun = 3;

struct GridPoint {
  std::size_t i = 0;
  std::size_t j = 0;

  friend auto operator<=>(const GridPoint&, const GridPoint&) = default;
};

struct SyncPath {
  std::vector<GridPoint> points;
  double total_cost = 0.0;
  /// RMS perpendicular residual from the path's own total-least-squares line.
  double straightness = 0.0;
  /// Set once endpoints have been trimmed; boundary invariants no longer hold.
  bool trimmed = false;

  std::size_t size() const noexcept { return points.size(); }
  friend bool operator==(const SyncPath&, const SyncPath&) = default;
};

enum class SearchDirection { forward, backward };

struct PathSearchConfig {
  std::size_t start_stride = 5;
  /// Candidates need at least this fraction of min(H, W) points.
  double min_length_fraction = 0.9;
  /// Worker count for independent searches (0 = default).
  std::size_t threads = 0;
};

inline double path_straightness(const std::vector<GridPoint>& points) {
  if (points.size() < 2) return 0.0;
  const double n = static_cast<double>(points.size());
  double mi = 0.0, mj = 0.0;
  for (const auto& p : points) {
    mi += static_cast<double>(p.i);
    mj += static_cast<double>(p.j);
  }
  mi /= n;
  mj /= n;
  double sii = 0.0, sjj = 0.0, sij = 0.0;
  for (const auto& p : points) {
    const double di = static_cast<double>(p.i) - mi;
    const double dj = static_cast<double>(p.j) - mj;
    sii += di * di;
    sjj += dj * dj;
    sij += di * dj;
  }
  sii /= n;
  sjj /= n;
  sij /= n;
  // Smallest eigenvalue of the 2x2 covariance = mean squared perpendicular residual.
  const double half_trace = 0.5 * (sii + sjj);
  const double half_diff = 0.5 * (sii - sjj);
  const double lambda_min = half_trace - std::sqrt(half_diff * half_diff + sij * sij);
  return std::sqrt(std::max(lambda_min, 0.0));
}

inline double path_cost(const Matrix& cost, const std::vector<GridPoint>& points) {
  double total = 0.0;
  for (const auto& p : points) total += cost(static_cast<Eigen::Index>(p.i), static_cast<Eigen::Index>(p.j));
  return total;
}

/// Structural check: admissible steps, run limit, and (for untrimmed paths)
/// start on the first row/column and end on the last row/column.
inline bool is_admissible(const SyncPath& path, std::size_t rows, std::size_t cols) {
  if (path.points.empty()) return false;
  int down_run = 0, right_run = 0;
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    const auto& p = path.points[k];
    if (p.i >= rows || p.j >= cols) return false;
    if (k == 0) continue;
    const auto& q = path.points[k - 1];
    const auto di = static_cast<long long>(p.i) - static_cast<long long>(q.i);
    const auto dj = static_cast<long long>(p.j) - static_cast<long long>(q.j);
    if (di == 1 && dj == 1) {
      down_run = right_run = 0;
    } else if (di == 1 && dj == 0) {
      right_run = 0;
      if (++down_run > kMaxRun) return false;
    } else if (di == 0 && dj == 1) {
      down_run = 0;
      if (++right_run > kMaxRun) return false;
    } else {
      return false;
    }
  }
  if (path.trimmed) return true;
  const auto& first = path.points.front();
  const auto& last = path.points.back();
  return (first.i == 0 || first.j == 0) && (last.i == rows - 1 || last.j == cols - 1);
}

namespace path_detail {

// Search state per cell: 0 = free (start or after a diagonal step),
// 1..3 = vertical run length, 4..6 = horizontal run length.
inline constexpr int kStates = 1 + 2 * kMaxRun;

inline constexpr int next_state(int state, int move) {
  // move: 0 diagonal, 1 vertical, 2 horizontal; returns -1 if forbidden.
  if (move == 0) return 0;
  if (move == 1) {
    if (state >= 1 && state <= kMaxRun) return state == kMaxRun ? -1 : state + 1;
    return 1;
  }
  if (state > kMaxRun) return state == 2 * kMaxRun ? -1 : state + 1;
  return kMaxRun + 1;
}

struct Label {
  double dist;
  std::uint32_t hops;
  std::int64_t off_diagonal;
  std::uint32_t a;
  std::uint32_t b;
  std::uint8_t state;

  auto key() const { return std::tie(dist, hops, off_diagonal, a, b, state); }
  bool operator>(const Label& o) const { return key() > o.key(); }
};

}  // namespace path_detail

/// Minimal node-cost path from `start` until the last row or column is
/// reached (forward), or the first row or column (backward). Runs over
/// (cell, run-direction, run-length) states. Equal-cost labels are ordered
/// by fewest steps (diagonals first), then by distance from the global
/// diagonal direction through the start, then row-major.
inline SyncPath constrained_dijkstra(const Matrix& cost, GridPoint start, SearchDirection direction) {
  using namespace path_detail;
  const auto H = static_cast<std::size_t>(cost.rows());
  const auto W = static_cast<std::size_t>(cost.cols());
  require(H > 0 && W > 0, Errc::empty_matrix, "cost matrix is empty");
  require(start.i < H && start.j < W, Errc::out_of_bounds, "start point outside the matrix");
  const bool forward = direction == SearchDirection::forward;
  // Search coordinates (a, b): identity forward, 180-degree rotation backward.
  auto to_grid = [&](std::size_t a, std::size_t b) {
    return forward ? GridPoint{a, b} : GridPoint{H - 1 - a, W - 1 - b};
  };
  const std::size_t a0 = forward ? start.i : H - 1 - start.i;
  const std::size_t b0 = forward ? start.j : W - 1 - start.j;
  require(a0 == 0 || b0 == 0, Errc::invalid_argument,
          forward ? "forward start must lie on the first row or column"
                  : "backward start must lie on the last row or column");
  auto cell_cost = [&](std::size_t a, std::size_t b) {
    const GridPoint g = to_grid(a, b);
    return cost(static_cast<Eigen::Index>(g.i), static_cast<Eigen::Index>(g.j));
  };
  auto off_diag = [&](std::size_t a, std::size_t b) {
    const auto da = static_cast<std::int64_t>(a) - static_cast<std::int64_t>(a0);
    const auto db = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(b0);
    const auto v = da * static_cast<std::int64_t>(W - 1) - db * static_cast<std::int64_t>(H - 1);
    return v < 0 ? -v : v;
  };

  const std::size_t n_states = H * W * kStates;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_states, inf);
  std::vector<std::uint32_t> hops(n_states, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::int64_t> parent(n_states, -1);
  std::vector<std::uint8_t> settled(n_states, 0);
  auto index = [&](std::size_t a, std::size_t b, int s) { return (a * W + b) * kStates + static_cast<std::size_t>(s); };

  std::priority_queue<Label, std::vector<Label>, std::greater<>> heap;
  const std::size_t s0 = index(a0, b0, 0);
  dist[s0] = cell_cost(a0, b0);
  hops[s0] = 0;
  heap.push({dist[s0], 0, 0, static_cast<std::uint32_t>(a0), static_cast<std::uint32_t>(b0), 0});

  static constexpr std::array<std::array<int, 2>, 3> kMoves{{{1, 1}, {1, 0}, {0, 1}}};
  std::int64_t goal = -1;
  while (!heap.empty()) {
    const Label top = heap.top();
    heap.pop();
    const std::size_t u = index(top.a, top.b, top.state);
    if (settled[u] || top.dist != dist[u] || top.hops != hops[u]) continue;
    settled[u] = 1;
    if (top.a == H - 1 || top.b == W - 1) {
      goal = static_cast<std::int64_t>(u);
      break;
    }
    for (int m = 0; m < 3; ++m) {
      const int ns = next_state(top.state, m);
      if (ns < 0) continue;
      const std::size_t na = top.a + static_cast<std::size_t>(kMoves[m][0]);
      const std::size_t nb = top.b + static_cast<std::size_t>(kMoves[m][1]);
      if (na >= H || nb >= W) continue;
      const std::size_t v = index(na, nb, ns);
      if (settled[v]) continue;
      const double nd = top.dist + cell_cost(na, nb);
      const std::uint32_t nh = top.hops + 1;
      if (nd < dist[v] || (nd == dist[v] && nh < hops[v])) {
        dist[v] = nd;
        hops[v] = nh;
        parent[v] = static_cast<std::int64_t>(u);
        heap.push({nd, nh, off_diag(na, nb), static_cast<std::uint32_t>(na), static_cast<std::uint32_t>(nb),
                   static_cast<std::uint8_t>(ns)});
      }
    }
  }
  require(goal >= 0, Errc::no_candidate, "search did not reach the matrix boundary");

  SyncPath path;
  path.total_cost = dist[static_cast<std::size_t>(goal)];
  for (std::int64_t s = goal; s >= 0; s = parent[static_cast<std::size_t>(s)]) {
    const std::size_t cell = static_cast<std::size_t>(s) / kStates;
    path.points.push_back(to_grid(cell / W, cell % W));
  }
  // Reconstruction runs goal -> start; forward paths are reported start-first,
  // backward paths already read in increasing (i, j) order.
  if (forward) std::reverse(path.points.begin(), path.points.end());
  path.straightness = path_straightness(path.points);
  return path;
}

inline SyncPath constrained_dijkstra(const SyncMatrix& cost, GridPoint start, SearchDirection direction) {
  require(cost.kind == MatrixKind::cost, Errc::wrong_kind, "pathfinding needs a cost matrix");
  return constrained_dijkstra(cost.values, start, direction);
}

/// Forward starts on every stride-th cell of the first row and column.
inline std::vector<GridPoint> forward_starts(std::size_t rows, std::size_t cols, std::size_t stride) {
  std::vector<GridPoint> starts;
  for (std::size_t j = 0; j < cols; j += stride) starts.push_back({0, j});
  for (std::size_t i = stride; i < rows; i += stride) starts.push_back({i, 0});
  return starts;
}

/// All paths examined by the two-pass search, in canonical order: forward
/// paths by start, then backward paths by sorted distinct endpoint.
inline std::vector<SyncPath> search_candidates(const Matrix& cost, const PathSearchConfig& cfg) {
  const auto H = static_cast<std::size_t>(cost.rows());
  const auto W = static_cast<std::size_t>(cost.cols());
  require(H >= 2 && W >= 2, Errc::empty_matrix, "path search needs at least a 2x2 matrix");
  require(cfg.start_stride >= 1, Errc::invalid_argument, "start stride must be at least 1");

  const auto starts = forward_starts(H, W, cfg.start_stride);
  std::vector<SyncPath> forward(starts.size());
  parallel_for(starts.size(), cfg.threads,
               [&](std::size_t k) { forward[k] = constrained_dijkstra(cost, starts[k], SearchDirection::forward); });

  std::set<GridPoint> ends;
  for (const auto& p : forward) ends.insert(p.points.back());
  const std::vector<GridPoint> endpoints(ends.begin(), ends.end());
  std::vector<SyncPath> backward(endpoints.size());
  parallel_for(endpoints.size(), cfg.threads, [&](std::size_t k) {
    backward[k] = constrained_dijkstra(cost, endpoints[k], SearchDirection::backward);
  });

  std::vector<SyncPath> all = std::move(forward);
  all.insert(all.end(), std::make_move_iterator(backward.begin()), std::make_move_iterator(backward.end()));
  return all;
}

/// Longest sufficiently long candidate; ties go to the straightest, then to
/// the lexicographically smallest point sequence.
inline SyncPath select_best_path(const std::vector<SyncPath>& candidates, std::size_t rows, std::size_t cols,
                                 double min_length_fraction) {
  require(min_length_fraction > 0 && min_length_fraction <= 1, Errc::invalid_argument,
          "min length fraction must be in (0, 1]");
  const double threshold = min_length_fraction * static_cast<double>(std::min(rows, cols));
  const SyncPath* best = nullptr;
  for (const auto& c : candidates) {
    if (static_cast<double>(c.size()) < threshold) continue;
    if (!best) {
      best = &c;
      continue;
    }
    if (c.size() != best->size()) {
      if (c.size() > best->size()) best = &c;
      continue;
    }
    if (c.straightness != best->straightness) {
      if (c.straightness < best->straightness) best = &c;
      continue;
    }
    if (c.points < best->points) best = &c;
  }
  require(best != nullptr, Errc::no_candidate,
          "no path reaches " + std::to_string(threshold) + " points in a " + std::to_string(rows) + "x" +
              std::to_string(cols) + " matrix");
  return *best;
}

inline SyncPath find_best_path(const Matrix& cost, const PathSearchConfig& cfg = {}) {
  const auto candidates = search_candidates(cost, cfg);
  return select_best_path(candidates, static_cast<std::size_t>(cost.rows()), static_cast<std::size_t>(cost.cols()),
                          cfg.min_length_fraction);
}

inline SyncPath find_best_path(const SyncMatrix& cost, const PathSearchConfig& cfg = {}) {
  require(cost.kind == MatrixKind::cost, Errc::wrong_kind, "pathfinding needs a cost matrix");
  return find_best_path(cost.values, cfg);
}

inline nlohmann::json to_json(const SyncPath& path) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : path.points) points.push_back({p.i, p.j});
  nlohmann::json j{{"points", points}, {"total_cost", path.total_cost}, {"straightness", path.straightness}};
  if (path.trimmed) j["trimmed"] = true;
  return j;
}

inline SyncPath path_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("points") && j["points"].is_array(), Errc::missing_field,
          "path JSON needs a 'points' array");
  SyncPath path;
  for (const auto& p : j["points"]) {
    require(p.is_array() && p.size() == 2 && p[0].is_number_unsigned() && p[1].is_number_unsigned(),
            Errc::malformed_header, "path points must be [i, j] pairs of non-negative integers");
    path.points.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
  }
  path.total_cost = j.value("total_cost", 0.0);
  path.straightness = j.contains("straightness") ? j["straightness"].get<double>() : path_straightness(path.points);
  path.trimmed = j.value("trimmed", false);
  return path;
}

}  // namespace cyclosync
