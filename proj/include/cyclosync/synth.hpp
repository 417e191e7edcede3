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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cyclosync/ecg.hpp"
#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/phase.hpp"

namespace cyclosync {

struct ViewConfig {
  double hr_bpm = 70.0;
  double fps = 30.0;
  double duration_s = 8.0;
  std::size_t frame_size = 32;
  std::uint64_t texture_seed = 1;
  /// Gaussian pixel noise (intensity units).
  double noise_sigma = 0.0;
  /// ECG noise as a fraction of the R amplitude; defaults to noise_sigma.
  std::optional<double> ecg_noise;
  double ecg_hz = 500.0;
  /// Contrast wash-in / wash-out around a visible plateau.
  bool contrast_envelope = true;
  /// Record ECG half a cycle before the first frame and past the first beat
  /// after the last frame, so every frame has enclosing R-peaks.
  bool ecg_margins = true;
  std::string video_id = "view";
  std::string patient_id = "patient";
};

struct SyntheticView {
  FrameSeries video;
  EcgTrace ecg;
  /// True R-peaks that fall inside the video, in frame coordinates.
  PeakList peaks;
  /// True phase of every frame.
  PhaseTrack phase;
  /// True R-peaks that fall inside the ECG recording, in frame coordinates.
  PeakList ecg_peaks;
  std::string patient_id;
};

namespace synth_detail {

struct Point {
  double x;
  double y;
};

// Shared vessel layout (normalized coordinates), three control points per curve.
inline constexpr std::array<std::array<Point, 3>, 5> kTemplate{{
    {{{0.10, 0.22}, {0.50, 0.38}, {0.90, 0.20}}},
    {{{0.15, 0.82}, {0.45, 0.50}, {0.85, 0.78}}},
    {{{0.50, 0.08}, {0.30, 0.55}, {0.62, 0.92}}},
    {{{0.08, 0.50}, {0.40, 0.70}, {0.70, 0.45}}},
    {{{0.75, 0.10}, {0.92, 0.45}, {0.80, 0.90}}},
}};

inline constexpr double kMotionAmplitude = 0.07;
inline constexpr double kContraction = 0.10;
inline constexpr double kVesselWidth = 0.05;
inline constexpr double kVesselDarkness = 0.55;
inline constexpr double kBackground = 0.78;

// ECG template: (offset from R in seconds, amplitude, width in seconds).
struct Bump {
  double offset_s;
  double amplitude;
  double sigma_s;
};
inline constexpr std::array<Bump, 3> kBeat{{{-0.14, 0.15, 0.025}, {0.0, 1.0, 0.012}, {0.20, 0.30, 0.040}}};

inline double contrast_level(double u) {
  if (u < 0.1 || u > 0.9) return 0.0;
  if (u < 0.2) return (u - 0.1) / 0.1;
  if (u > 0.8) return (0.9 - u) / 0.1;
  return 1.0;
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + stream;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Anatomy {
  std::array<std::array<Point, 3>, kTemplate.size()> control;
  std::array<std::array<double, 3>, kTemplate.size()> motion_phase;
  std::array<double, 4> tex_fx, tex_fy, tex_phase, tex_amp;
};

inline Anatomy make_anatomy(std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 1));
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Anatomy a{};
  for (std::size_t c = 0; c < kTemplate.size(); ++c) {
    for (std::size_t k = 0; k < 3; ++k) {
      a.control[c][k] = {kTemplate[c][k].x + jitter(rng), kTemplate[c][k].y + jitter(rng)};
      // Motion phase offsets belong to the template, not the view.
      a.motion_phase[c][k] = 0.37 * static_cast<double>(3 * c + k);
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    a.tex_fx[k] = 1.0 + 3.0 * unit(rng);
    a.tex_fy[k] = 1.0 + 3.0 * unit(rng);
    a.tex_phase[k] = 2.0 * std::numbers::pi * unit(rng);
    a.tex_amp[k] = 0.015 * unit(rng);
  }
  return a;
}

inline Frame render(const Anatomy& a, std::size_t size, double phase, double contrast) {
  constexpr int kSamples = 24;
  const double angle = 2.0 * std::numbers::pi * phase;
  const double scale = 1.0 - kContraction * 0.5 * (1.0 - std::cos(angle));
  std::vector<Point> samples;
  samples.reserve(kTemplate.size() * kSamples);
  for (std::size_t c = 0; c < kTemplate.size(); ++c) {
    std::array<Point, 3> p{};
    for (std::size_t k = 0; k < 3; ++k) {
      const double ph = a.motion_phase[c][k];
      const double x = 0.5 + scale * (a.control[c][k].x - 0.5) + kMotionAmplitude * std::cos(angle + ph);
      const double y = 0.5 + scale * (a.control[c][k].y - 0.5) + kMotionAmplitude * std::sin(angle + 1.3 * ph);
      p[k] = {x, y};
    }
    for (int s = 0; s < kSamples; ++s) {
      const double u = static_cast<double>(s) / (kSamples - 1);
      const double w0 = (1 - u) * (1 - u), w1 = 2 * u * (1 - u), w2 = u * u;
      samples.push_back({w0 * p[0].x + w1 * p[1].x + w2 * p[2].x, w0 * p[0].y + w1 * p[1].y + w2 * p[2].y});
    }
  }
  const auto n = static_cast<Eigen::Index>(size);
  Frame f(n, n);
  const double inv2w2 = 1.0 / (2.0 * kVesselWidth * kVesselWidth);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double y = (static_cast<double>(r) + 0.5) / static_cast<double>(size);
    for (Eigen::Index col = 0; col < n; ++col) {
      const double x = (static_cast<double>(col) + 0.5) / static_cast<double>(size);
      double d2 = 1e9;
      for (const auto& s : samples) d2 = std::min(d2, (s.x - x) * (s.x - x) + (s.y - y) * (s.y - y));
      double bg = kBackground;
      for (std::size_t k = 0; k < 4; ++k) {
        bg += a.tex_amp[k] * std::cos(2.0 * std::numbers::pi * (a.tex_fx[k] * x + a.tex_fy[k] * y) + a.tex_phase[k]);
      }
      f(r, col) = bg - contrast * kVesselDarkness * std::exp(-d2 * inv2w2);
    }
  }
  return f;
}

}  // namespace synth_detail

/// Period of the cardiac cycle in frames.
inline double cycle_frames(double hr_bpm, double fps) { return 60.0 * fps / hr_bpm; }

inline void validate(const ViewConfig& cfg) {
  require(cfg.hr_bpm >= 30.0 && cfg.hr_bpm <= 240.0, Errc::invalid_argument, "heart rate must be in [30, 240] bpm");
  require(cfg.fps > 0.0, Errc::invalid_argument, "fps must be positive");
  require(cfg.ecg_hz > 0.0, Errc::invalid_argument, "ecg_hz must be positive");
  require(cfg.frame_size >= 4, Errc::invalid_argument, "frame size must be at least 4");
  require(cfg.noise_sigma >= 0.0 && cfg.ecg_noise.value_or(0.0) >= 0.0, Errc::invalid_argument,
          "noise must be non-negative");
  require(cfg.duration_s * cfg.hr_bpm / 60.0 >= 2.0, Errc::invalid_argument,
          "duration must cover at least 2 cardiac cycles");
}

/// Renders one view whose phase is frac(t hr / (60 fps)) at frame t, with
/// a matching ECG and the exact R-peaks and phases.
inline SyntheticView generate_view(const ViewConfig& cfg) {
  validate(cfg);
  const auto frame_count = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fps));
  const double period = cycle_frames(cfg.hr_bpm, cfg.fps);

  SyntheticView view;
  view.patient_id = cfg.patient_id;

  // Beats k = -1 .. last, enough to enclose every frame.
  const auto last_beat = static_cast<long long>(std::floor(static_cast<double>(frame_count - 1) / period)) + 1;
  PeakList all;
  for (long long k = -1; k <= last_beat; ++k) all.peaks_frames.push_back(static_cast<double>(k) * period);
  view.phase = compute_phase(all, frame_count);
  for (double p : all.peaks_frames)
    if (p >= 0.0 && p < static_cast<double>(frame_count)) view.peaks.peaks_frames.push_back(p);

  // Frames.
  const synth_detail::Anatomy anatomy = synth_detail::make_anatomy(cfg.texture_seed);
  std::mt19937_64 pixel_rng(synth_detail::mix(cfg.texture_seed, 2));
  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  view.video.fps = cfg.fps;
  view.video.video_id = cfg.video_id;
  view.video.frames.reserve(frame_count);
  for (std::size_t t = 0; t < frame_count; ++t) {
    const double u = frame_count > 1 ? static_cast<double>(t) / static_cast<double>(frame_count - 1) : 0.0;
    const double contrast = cfg.contrast_envelope ? synth_detail::contrast_level(u) : 1.0;
    Frame f = synth_detail::render(anatomy, cfg.frame_size, view.phase.phases[t], contrast);
    if (cfg.noise_sigma > 0.0) {
      for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] += cfg.noise_sigma * pixel_noise(pixel_rng);
    }
    view.video.frames.push_back(f.cwiseMax(0.0).cwiseMin(1.0));
  }

  // ECG on its own clock; video frame 0 sits at frame0_time_s.
  const double cycle_s = 60.0 / cfg.hr_bpm;
  const double lead_s = cfg.ecg_margins ? 0.5 * cycle_s : 0.0;
  const double span_s = cfg.ecg_margins ? lead_s + static_cast<double>(last_beat) * period / cfg.fps + 0.5 * cycle_s
                                        : static_cast<double>(frame_count) / cfg.fps;
  const auto n_samples = static_cast<std::size_t>(std::floor(span_s * cfg.ecg_hz));
  view.ecg.ecg_hz = cfg.ecg_hz;
  view.ecg.fps = cfg.fps;
  view.ecg.frame0_time_s = lead_s;
  view.ecg.start_time_s = 0.0;
  view.ecg.samples.assign(n_samples, 0.0);
  const double ecg_noise = cfg.ecg_noise.value_or(cfg.noise_sigma);
  std::mt19937_64 ecg_rng(synth_detail::mix(cfg.texture_seed, 3));
  std::normal_distribution<double> ecg_dist(0.0, 1.0);
  for (long long k = -2; k <= last_beat + 1; ++k) {
    const double r_time = lead_s + static_cast<double>(k) * period / cfg.fps;
    const double r_frame = static_cast<double>(k) * period;
    if (r_time >= 0.0 && r_time * cfg.ecg_hz < static_cast<double>(n_samples)) view.ecg_peaks.peaks_frames.push_back(r_frame);
    for (const auto& bump : synth_detail::kBeat) {
      const double centre = r_time + bump.offset_s;
      const double reach = 5.0 * bump.sigma_s;
      const auto lo = static_cast<long long>(std::ceil((centre - reach) * cfg.ecg_hz));
      const auto hi = static_cast<long long>(std::floor((centre + reach) * cfg.ecg_hz));
      for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n_samples); ++i) {
        const double z = (static_cast<double>(i) / cfg.ecg_hz - centre) / bump.sigma_s;
        view.ecg.samples[static_cast<std::size_t>(i)] += bump.amplitude * std::exp(-0.5 * z * z);
      }
    }
  }
  if (ecg_noise > 0.0) {
    for (double& s : view.ecg.samples) s += ecg_noise * ecg_dist(ecg_rng);
  }
  return view;
}

struct PairConfig {
  double hr_a = 70.0;
  double hr_b = 85.0;
  double fps_a = 30.0;
  double fps_b = 30.0;
  double duration_s = 8.0;
  std::uint64_t seed_a = 1;
  std::uint64_t seed_b = 2;
  double noise_sigma = 0.0;
  std::size_t frame_size = 32;
  /// Simultaneous acquisition: both views share view A's heart rate and clock.
  bool biplane = false;
  bool contrast_envelope = true;
  std::string patient_id = "patient";
};

struct SyntheticPair {
  SyntheticView a;
  SyntheticView b;
};

inline SyntheticPair generate_pair(const PairConfig& cfg) {
  ViewConfig va;
  va.hr_bpm = cfg.hr_a;
  va.fps = cfg.fps_a;
  va.duration_s = cfg.duration_s;
  va.frame_size = cfg.frame_size;
  va.texture_seed = cfg.seed_a;
  va.noise_sigma = cfg.noise_sigma;
  va.contrast_envelope = cfg.contrast_envelope;
  va.video_id = "a";
  va.patient_id = cfg.patient_id;
  ViewConfig vb = va;
  vb.hr_bpm = cfg.biplane ? cfg.hr_a : cfg.hr_b;
  vb.fps = cfg.biplane ? cfg.fps_a : cfg.fps_b;
  vb.texture_seed = cfg.seed_b;
  vb.video_id = "b";
  return {generate_view(va), generate_view(vb)};
}

}  // namespace cyclosync
