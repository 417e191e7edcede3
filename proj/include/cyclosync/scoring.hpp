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

#include <cstddef>
#include <optional>
#include <string>

#include "cyclosync/error.hpp"
#include "cyclosync/pathfinding.hpp"
#include "cyclosync/phase.hpp"
#include "cyclosync/sync_matrix.hpp"

namespace cyclosync {

/// Mean ground-truth value over the unmasked path points.
inline double raw_path_score(const SyncPath& path, const SyncMatrix& gt) {
  require(gt.kind == MatrixKind::ground_truth, Errc::wrong_kind, "scoring needs a ground-truth matrix");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : path.points) {
    require(p.i < gt.rows() && p.j < gt.cols(), Errc::out_of_bounds,
            "path point (" + std::to_string(p.i) + ", " + std::to_string(p.j) + ") outside ground truth " +
                std::to_string(gt.rows()) + "x" + std::to_string(gt.cols()));
    if (gt.masked(p.i, p.j)) continue;
    sum += gt(p.i, p.j);
    ++n;
  }
  require(n > 0, Errc::all_masked, "every path point falls on a masked ground-truth cell");
  return sum / static_cast<double>(n);
}

struct PathScore {
  double raw = 0.0;
  double normalized = 0.0;
  double denominator = 0.0;
  std::size_t n_points = 0;
  std::size_t trimmed = 0;
};

/// Score relative to the best path found on the ground truth itself.
inline PathScore score_path(const SyncPath& path, const SyncMatrix& gt, const PathSearchConfig& cfg = {}) {
  PathScore s;
  s.raw = raw_path_score(path, gt);
  s.denominator = raw_path_score(ground_truth_best_path(gt, cfg), gt);
  require(s.denominator > 0.0, Errc::zero_denominator, "ground-truth best path scores zero");
  s.normalized = s.raw / s.denominator;
  s.n_points = path.size();
  return s;
}

inline double normalized_score(const SyncPath& path, const SyncMatrix& gt, const PathSearchConfig& cfg = {}) {
  return score_path(path, gt, cfg).normalized;
}

/// Drops the first and last k points.
inline SyncPath trim_endpoints(const SyncPath& path, std::size_t k) {
  if (k == 0) return path;
  require(path.size() > 2 * k, Errc::path_too_short,
          "cannot trim " + std::to_string(k) + " points from each end of a " + std::to_string(path.size()) +
              "-point path");
  SyncPath out;
  out.points.assign(path.points.begin() + static_cast<std::ptrdiff_t>(k),
                    path.points.end() - static_cast<std::ptrdiff_t>(k));
  out.trimmed = true;
  out.straightness = path_straightness(out.points);
  return out;
}

inline nlohmann::json to_json(const PathScore& s) {
  return {{"raw", s.raw},
          {"normalized", s.normalized},
          {"denominator", s.denominator},
          {"n_points", s.n_points},
          {"trimmed", s.trimmed}};
}

}  // namespace cyclosync
