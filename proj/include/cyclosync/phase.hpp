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
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cyclosync/ecg.hpp"
#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/matrix.hpp"
#include "cyclosync/pathfinding.hpp"
#include "cyclosync/sync_matrix.hpp"

namespace cyclosync {

/// Per-frame cardiac phase in [0, 1); frames without an enclosing pair of
/// R-peaks are invalid.
struct PhaseTrack {
  std::vector<double> phases;
  std::vector<std::uint8_t> valid;

  std::size_t size() const noexcept { return phases.size(); }
  bool is_valid(std::size_t t) const noexcept { return valid[t] != 0; }
  std::size_t valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
  }

  /// Frames [first, first + count).
  PhaseTrack slice(std::size_t first, std::size_t count) const {
    require(first + count <= size(), Errc::out_of_bounds, "phase slice beyond track end");
    PhaseTrack out;
    out.phases.assign(phases.begin() + static_cast<std::ptrdiff_t>(first),
                      phases.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.valid.assign(valid.begin() + static_cast<std::ptrdiff_t>(first),
                     valid.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
  }

  friend bool operator==(const PhaseTrack&, const PhaseTrack&) = default;
};

/// phase(t) = (t - p_k) / (p_{k+1} - p_k) for p_k <= t < p_{k+1}.
inline PhaseTrack compute_phase(const PeakList& peaks, std::size_t frame_count) {
  validate(peaks);
  const auto& p = peaks.peaks_frames;
  PhaseTrack track;
  track.phases.assign(frame_count, 0.0);
  track.valid.assign(frame_count, 0);
  std::size_t k = 0;
  for (std::size_t t = 0; t < frame_count; ++t) {
    const double x = static_cast<double>(t);
    while (k + 1 < p.size() && p[k + 1] <= x) ++k;
    if (x < p[k] || k + 1 >= p.size()) continue;
    const double phase = (x - p[k]) / (p[k + 1] - p[k]);
    track.phases[t] = std::min(phase, std::nextafter(1.0, 0.0));
    track.valid[t] = 1;
  }
  return track;
}

/// Continuous cycle coordinate: index of the enclosing peak plus the phase.
/// Only meaningful at valid frames.
inline std::vector<double> cycle_position(const PeakList& peaks, std::size_t frame_count) {
  const PhaseTrack track = compute_phase(peaks, frame_count);
  std::vector<double> out(frame_count, 0.0);
  const auto& p = peaks.peaks_frames;
  for (std::size_t t = 0; t < frame_count; ++t) {
    if (!track.is_valid(t)) continue;
    const auto k = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), static_cast<double>(t)) - p.begin()) - 1;
    out[t] = static_cast<double>(k) + track.phases[t];
  }
  return out;
}

/// min(|a - b|, 1 - |a - b|), in [0, 0.5].
inline double circular_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

/// Synchronization level 1 - 2 d(phase_a, phase_b).
inline double synchronization_level(double phase_a, double phase_b) {
  return 1.0 - 2.0 * circular_distance(phase_a, phase_b);
}

inline SyncMatrix ground_truth_matrix(const PhaseTrack& a, const PhaseTrack& b) {
  require(a.size() > 0 && b.size() > 0, Errc::empty_matrix, "phase tracks must be non-empty");
  require(a.valid_count() > 0 && b.valid_count() > 0, Errc::all_masked, "phase track has no valid frame");
  SyncMatrix m;
  m.kind = MatrixKind::ground_truth;
  m.values = Matrix::Zero(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  const bool need_mask = a.valid_count() < a.size() || b.valid_count() < b.size();
  if (need_mask) m.mask.assign(a.size() * b.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!a.is_valid(i) || !b.is_valid(j)) {
        m.mask[i * b.size() + j] = 1;
        continue;
      }
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          synchronization_level(a.phases[i], b.phases[j]);
    }
  }
  return m;
}

/// Ground truth in feature-window coordinates: row r is the window whose
/// last frame is window_a.start + 2 + r (likewise for columns).
inline SyncMatrix ground_truth_for_windows(const PhaseTrack& a, const ContrastWindow& window_a, const PhaseTrack& b,
                                           const ContrastWindow& window_b) {
  require(window_a.size() >= 3 && window_b.size() >= 3, Errc::window_too_short, "contrast window shorter than 3");
  SyncMatrix m = ground_truth_matrix(a.slice(window_a.start + 2, window_a.size() - 2),
                                     b.slice(window_b.start + 2, window_b.size() - 2));
  m.row_offset = window_a.start + 2;
  m.col_offset = window_b.start + 2;
  return m;
}

/// Best path found on the ground truth itself, with the same search rules.
inline SyncPath ground_truth_best_path(const SyncMatrix& gt, const PathSearchConfig& cfg = {}) {
  require(gt.kind == MatrixKind::ground_truth, Errc::wrong_kind, "expected a ground-truth matrix");
  return find_best_path(to_cost(gt), cfg);
}

}  // namespace cyclosync
