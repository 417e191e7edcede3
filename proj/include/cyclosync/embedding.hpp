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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/mlp.hpp"
#include "cyclosync/phase.hpp"
#include "cyclosync/types.hpp"

namespace cyclosync {

/// Three consecutive frames (t-2, t-1, t), labeled by the last one.
struct WindowSpec {
  /// Position in the window list.
  std::size_t ordinal = 0;
  std::size_t last_frame_index = 0;
  std::array<const Frame*, 3> frames{};
};

/// One window per t in [start + 2, end).
inline std::vector<WindowSpec> make_windows(const FrameSeries& video, const ContrastWindow& window) {
  require(window.end > window.start && window.size() >= 3, Errc::window_too_short,
          "contrast window must hold at least 3 frames");
  require(window.end <= video.size(), Errc::out_of_bounds, "contrast window extends past the video");
  std::vector<WindowSpec> windows;
  windows.reserve(window.size() - 2);
  for (std::size_t t = window.start + 2; t < window.end; ++t) {
    windows.push_back({windows.size(), t, {&video.frames[t - 2], &video.frames[t - 1], &video.frames[t]}});
  }
  return windows;
}

/// Flattened (row-major) concatenation of the three frames.
inline Vector window_input(const WindowSpec& w) {
  const auto n = w.frames[0]->size();
  Vector x(3 * n);
  for (std::size_t k = 0; k < 3; ++k) {
    x.segment(static_cast<Eigen::Index>(k) * n, n) = Eigen::Map<const Vector>(w.frames[k]->data(), n);
  }
  return x;
}

/// Maps 3-frame windows to feature vectors. Implementations are read-only
/// once constructed.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  /// Throws dimension_mismatch if frames of this size are not accepted.
  virtual void check_frames(Eigen::Index height, Eigen::Index width) const = 0;
  virtual Vector embed(const WindowSpec& window) const = 0;
  virtual void check_window_count(std::size_t) const {}
};

inline FeatureSeries embed_series(const Embedder& embedder, const std::vector<WindowSpec>& windows) {
  FeatureSeries series;
  series.dim = embedder.dim();
  if (windows.empty()) return series;
  embedder.check_frames(windows.front().frames[0]->rows(), windows.front().frames[0]->cols());
  embedder.check_window_count(windows.size());
  series.first_frame = windows.front().last_frame_index;
  series.vectors.reserve(windows.size());
  for (const auto& w : windows) {
    Vector v = embedder.embed(w);
    require(static_cast<std::size_t>(v.size()) == series.dim, Errc::dimension_mismatch,
            "embedder returned a vector of the wrong size");
    require(v.allFinite(), Errc::non_finite, "embedder returned a non-finite vector");
    series.vectors.push_back(std::move(v));
  }
  return series;
}

namespace embed_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace embed_detail

/// Stand-in for a trained network: [cos 2 pi phase, sin 2 pi phase, 0, ...]
/// plus Gaussian noise drawn from a stream keyed by (seed, frame index).
class PhaseOracleEmbedder final : public Embedder {
 public:
  PhaseOracleEmbedder(PhaseTrack track, std::size_t dim, double noise_sigma, std::uint64_t seed)
      : track_(std::move(track)), dim_(dim), noise_sigma_(noise_sigma), seed_(seed) {
    require(dim >= 2, Errc::invalid_argument, "phase oracle needs dim >= 2");
    require(noise_sigma >= 0.0, Errc::invalid_argument, "noise sigma must be non-negative");
  }

  std::size_t dim() const override { return dim_; }
  void check_frames(Eigen::Index, Eigen::Index) const override {}

  Vector embed_frame(std::size_t frame) const {
    require(frame < track_.size(), Errc::out_of_bounds, "frame " + std::to_string(frame) + " has no phase");
    require(track_.is_valid(frame), Errc::invalid_argument, "frame " + std::to_string(frame) + " has no valid phase");
    const double angle = 2.0 * std::numbers::pi * track_.phases[frame];
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_));
    v(0) = std::cos(angle);
    v(1) = std::sin(angle);
    if (noise_sigma_ > 0.0) {
      std::mt19937_64 rng(embed_detail::splitmix64(seed_ ^ embed_detail::splitmix64(frame)));
      std::normal_distribution<double> noise(0.0, noise_sigma_);
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) += noise(rng);
    }
    return v;
  }

  Vector embed(const WindowSpec& window) const override { return embed_frame(window.last_frame_index); }

 private:
  PhaseTrack track_;
  std::size_t dim_;
  double noise_sigma_;
  std::uint64_t seed_;
};

inline std::unique_ptr<Embedder> phase_oracle_embedder(PhaseTrack track, std::size_t dim, double noise_sigma,
                                                       std::uint64_t seed) {
  return std::make_unique<PhaseOracleEmbedder>(std::move(track), dim, noise_sigma, seed);
}

/// Replays vectors computed elsewhere (e.g. by an external CNN exporter);
/// window k receives vector k.
class PrecomputedEmbedder final : public Embedder {
 public:
  explicit PrecomputedEmbedder(FeatureSeries series) : series_(std::move(series)) {}

  std::size_t dim() const override { return series_.dim; }
  void check_frames(Eigen::Index, Eigen::Index) const override {}
  Vector embed(const WindowSpec& window) const override {
    require(window.ordinal < series_.size(), Errc::dimension_mismatch,
            "feature file has " + std::to_string(series_.size()) + " vectors, window " +
                std::to_string(window.ordinal) + " requested");
    return series_.vectors[window.ordinal];
  }
  void check_window_count(std::size_t count) const override {
    require(count == series_.size(), Errc::dimension_mismatch,
            "feature file has " + std::to_string(series_.size()) + " vectors for " + std::to_string(count) +
                " windows");
  }

 private:
  FeatureSeries series_;
};

class MlpEmbedder final : public Embedder {
 public:
  explicit MlpEmbedder(ToyMlp model) : model_(std::move(model)) {}

  std::size_t dim() const override { return model_.output_size(); }
  void check_frames(Eigen::Index height, Eigen::Index width) const override {
    require(static_cast<std::size_t>(3 * height * width) == model_.input_size(), Errc::dimension_mismatch,
            "MLP expects " + std::to_string(model_.input_size()) + " inputs, frames give 3x" +
                std::to_string(height) + "x" + std::to_string(width));
  }
  Vector embed(const WindowSpec& window) const override { return model_.forward(window_input(window)); }

  const ToyMlp& model() const noexcept { return model_; }

 private:
  ToyMlp model_;
};

}  // namespace cyclosync
