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
#include <numeric>
#include <vector>

#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"

namespace cyclosync {

/// R-peak positions in (fractional) video-frame coordinates, strictly increasing.
struct PeakList {
  std::vector<double> peaks_frames;

  std::size_t size() const noexcept { return peaks_frames.size(); }
};

struct PeakDetectionConfig {
  double sigma_s = 0.02;
  double min_gap_s = 0.25;
  /// Local maxima below this fraction of the 90th percentile are rejected.
  double prominence_fraction = 0.5;
  double prominence_percentile = 0.9;
};

namespace ecg_detail {

inline std::vector<double> standardize(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> z(x.size(), 0.0);
  if (sd > 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
  }
  return z;
}

}  // namespace ecg_detail

/// Gaussian smoothing with the kernel truncated at +-4 sigma. Near the edges
/// the kernel is renormalized over the samples that exist.
inline std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma_samples) {
  require(sigma_samples > 0, Errc::invalid_argument, "smoothing sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_samples));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double u = static_cast<double>(k) / sigma_samples;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * u * u);
  }
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double wsum = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - radius);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + radius);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = kernel[static_cast<std::size_t>(j - i + radius)];
      acc += w * x[static_cast<std::size_t>(j)];
      wsum += w;
    }
    y[static_cast<std::size_t>(i)] = acc / wsum;
  }
  return y;
}

/// Linear-interpolated percentile, q in [0, 1].
inline double percentile(std::vector<double> values, double q) {
  require(!values.empty(), Errc::invalid_argument, "percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Sample indices of R-peaks: standardize, smooth, take positive-to-negative
/// gradient sign changes above the prominence threshold, then enforce the
/// minimum gap greedily from the highest peak down.
inline std::vector<std::size_t> detect_r_peak_samples(const EcgTrace& trace, const PeakDetectionConfig& cfg = {}) {
  validate(trace);
  require(cfg.sigma_s > 0 && cfg.min_gap_s > 0, Errc::invalid_argument, "sigma and min gap must be positive");
  const std::vector<double> smooth =
      gaussian_smooth(ecg_detail::standardize(trace.samples), cfg.sigma_s * trace.ecg_hz);
  const double threshold = cfg.prominence_fraction * percentile(smooth, cfg.prominence_percentile);

  struct Candidate {
    std::size_t index;
    double value;
    bool edge = false;
  };
  std::vector<Candidate> candidates;
  const std::size_t n = smooth.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(smooth[i] > smooth[i - 1])) continue;
    std::size_t k = i;
    while (k + 1 < n && smooth[k + 1] == smooth[k]) ++k;
    if (k + 1 < n && smooth[k + 1] < smooth[k] && smooth[i] >= threshold) {
      candidates.push_back({i, smooth[i]});
    }
  }
  // A beat cut by the trace boundary is not reported but still claims its gap.
  if (n >= 2 && smooth[0] > smooth[1] && smooth[0] >= threshold) candidates.push_back({0, smooth[0], true});
  if (n >= 2 && smooth[n - 1] > smooth[n - 2] && smooth[n - 1] >= threshold) {
    candidates.push_back({n - 1, smooth[n - 1], true});
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  const double gap = cfg.min_gap_s * trace.ecg_hz;
  std::vector<Candidate> kept;
  for (const Candidate& c : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      const double d = std::abs(static_cast<double>(k.index) - static_cast<double>(c.index));
      return d >= gap;
    });
    if (clear) kept.push_back(c);
  }
  std::vector<std::size_t> accepted;
  for (const Candidate& k : kept) {
    if (!k.edge) accepted.push_back(k.index);
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

inline PeakList detect_r_peaks(const EcgTrace& trace, const PeakDetectionConfig& cfg = {}) {
  const auto samples = detect_r_peak_samples(trace, cfg);
  require(samples.size() >= 2, Errc::too_few_peaks,
          "found " + std::to_string(samples.size()) + " R-peaks, need at least 2");
  PeakList peaks;
  peaks.peaks_frames.reserve(samples.size());
  for (std::size_t s : samples) peaks.peaks_frames.push_back(trace.sample_to_frame(static_cast<double>(s)));
  return peaks;
}

inline void validate(const PeakList& peaks, std::size_t min_count = 2) {
  require(peaks.size() >= min_count, Errc::too_few_peaks,
          "need at least " + std::to_string(min_count) + " peaks, got " + std::to_string(peaks.size()));
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    require(std::isfinite(peaks.peaks_frames[k]), Errc::non_finite, "peak position is not finite");
    if (k > 0) {
      require(peaks.peaks_frames[k] > peaks.peaks_frames[k - 1], Errc::non_monotone,
              "peaks must be strictly increasing");
    }
  }
}

/// Number of inter-peak intervals.
inline double peaks_to_cycle_count(const PeakList& peaks) {
  validate(peaks);
  return static_cast<double>(peaks.size() - 1);
}

inline nlohmann::json to_json(const PeakList& peaks) { return {{"peaks_frames", peaks.peaks_frames}}; }

inline PeakList peaks_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("peaks_frames") && j["peaks_frames"].is_array(), Errc::missing_field,
          "expected {\"peaks_frames\": [...]}");
  PeakList peaks;
  peaks.peaks_frames = j["peaks_frames"].get<std::vector<double>>();
  validate(peaks);
  return peaks;
}

}  // namespace cyclosync
