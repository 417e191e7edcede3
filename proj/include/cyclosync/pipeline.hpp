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
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "cyclosync/ecg.hpp"
#include "cyclosync/embedding.hpp"
#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/matrix.hpp"
#include "cyclosync/pathfinding.hpp"
#include "cyclosync/phase.hpp"
#include "cyclosync/scoring.hpp"

namespace cyclosync {

inline constexpr const char* kVersion = "1.0.0";

/// Runs `fn`, prefixing any Error with the pipeline stage that raised it.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "[" + stage + "] " + e.detail());
  }
}

/// Rounds every value to the 32-bit width used on disk, so in-memory
/// results match what the file-based subcommands compute.
inline FeatureSeries quantize(FeatureSeries f) {
  for (auto& v : f.vectors) v = v.cast<float>().cast<double>();
  return f;
}

inline SyncMatrix quantize(SyncMatrix m) {
  m.values = m.values.cast<float>().cast<double>();
  return m;
}

struct PipelineVideo {
  FrameSeries video;
  std::optional<EcgTrace> ecg;
};

struct PipelineConfig {
  PathSearchConfig search;
  PeakDetectionConfig peaks;
  std::size_t trim = 0;
  std::size_t threads = 0;
  /// When false every frame is used (clips without a contrast wash-in).
  bool contrast_window = true;
  /// Free-form provenance copied into the report (embedder spec, seeds...).
  nlohmann::json provenance = nlohmann::json::object();
};

struct PipelineResult {
  ContrastWindow window_a;
  ContrastWindow window_b;
  FeatureSeries features_a;
  FeatureSeries features_b;
  SyncMatrix similarity;
  SyncPath path;
  std::optional<SyncMatrix> ground_truth;
  std::optional<PathScore> score;
};

/// Ground truth from each video's ECG, in feature-window coordinates.
inline SyncMatrix ground_truth_from_ecg(const FrameSeries& video_a, const EcgTrace& ecg_a,
                                        const ContrastWindow& window_a, const FrameSeries& video_b,
                                        const EcgTrace& ecg_b, const ContrastWindow& window_b,
                                        const PeakDetectionConfig& cfg = {}) {
  const PhaseTrack phase_a = compute_phase(detect_r_peaks(ecg_a, cfg), video_a.size());
  const PhaseTrack phase_b = compute_phase(detect_r_peaks(ecg_b, cfg), video_b.size());
  SyncMatrix gt = quantize(ground_truth_for_windows(phase_a, window_a, phase_b, window_b));
  gt.rows_video = video_a.video_id;
  gt.cols_video = video_b.video_id;
  return gt;
}

/// Score with optional trimming; shared by the `score` subcommand and the pipeline.
inline PathScore score_with_trim(const SyncPath& path, const SyncMatrix& gt, const PathSearchConfig& search,
                                 std::size_t trim) {
  PathScore s = score_path(trim_endpoints(path, trim), gt, search);
  s.trimmed = trim;
  return s;
}

/// contrast window -> windows -> embed -> similarity -> cost -> best path
/// -> (with ECG for both videos) score against the ECG ground truth.
inline PipelineResult run_pipeline(const PipelineVideo& a, const PipelineVideo& b, const Embedder& embedder_a,
                                   const Embedder& embedder_b, const PipelineConfig& cfg) {
  PipelineResult r;
  auto window_of = [&](const FrameSeries& v) {
    return cfg.contrast_window ? extract_contrast_window(v) : ContrastWindow{0, v.size()};
  };
  r.window_a = run_stage("contrast-window A", [&] { return window_of(a.video); });
  r.window_b = run_stage("contrast-window B", [&] { return window_of(b.video); });
  r.features_a = run_stage("embed A", [&] { return quantize(embed_series(embedder_a, make_windows(a.video, r.window_a))); });
  r.features_b = run_stage("embed B", [&] { return quantize(embed_series(embedder_b, make_windows(b.video, r.window_b))); });
  r.similarity =
      run_stage("similarity", [&] { return quantize(similarity_matrix(r.features_a, r.features_b, cfg.threads)); });
  r.similarity.rows_video = a.video.video_id;
  r.similarity.cols_video = b.video.video_id;
  PathSearchConfig search = cfg.search;
  search.threads = cfg.threads;
  r.path = run_stage("pathfinding", [&] { return find_best_path(to_cost(r.similarity), search); });
  if (a.ecg && b.ecg) {
    r.ground_truth = run_stage("ground-truth", [&] {
      return ground_truth_from_ecg(a.video, *a.ecg, r.window_a, b.video, *b.ecg, r.window_b, cfg.peaks);
    });
    r.score = run_stage("score", [&] { return score_with_trim(r.path, *r.ground_truth, search, cfg.trim); });
  }
  return r;
}

inline nlohmann::json make_report(const PipelineVideo& a, const PipelineVideo& b, const PipelineResult& r,
                                  const PipelineConfig& cfg) {
  auto video_json = [](const PipelineVideo& v, const ContrastWindow& w, const FeatureSeries& f) {
    return nlohmann::json{{"video_id", v.video.video_id},
                          {"frames", v.video.size()},
                          {"fps", v.video.fps},
                          {"contrast_window", {w.start, w.end}},
                          {"windows", f.size()},
                          {"first_window_frame", f.first_frame},
                          {"feature_dim", f.dim},
                          {"has_ecg", v.ecg.has_value()}};
  };
  nlohmann::json report;
  report["tool"] = "cyclosync";
  report["version"] = kVersion;
  report["config"] = {{"start_stride", cfg.search.start_stride},
                      {"min_length_fraction", cfg.search.min_length_fraction},
                      {"peak_sigma_s", cfg.peaks.sigma_s},
                      {"peak_min_gap_s", cfg.peaks.min_gap_s},
                      {"trim", cfg.trim},
                      {"contrast_window", cfg.contrast_window},
                      {"provenance", cfg.provenance}};
  report["videos"] = {{"a", video_json(a, r.window_a, r.features_a)}, {"b", video_json(b, r.window_b, r.features_b)}};
  report["path"] = {{"n_points", r.path.size()},
                    {"total_cost", r.path.total_cost},
                    {"straightness", r.path.straightness},
                    {"first", {r.path.points.front().i, r.path.points.front().j}},
                    {"last", {r.path.points.back().i, r.path.points.back().j}}};
  report["score"] = r.score ? to_json(*r.score) : nlohmann::json(nullptr);
  return report;
}

/// Similarity image as gray cells with the path drawn on top.
inline std::string path_overlay_svg(const SyncMatrix& m, const SyncPath& path, int cell_px = 4) {
  std::ostringstream svg;
  const auto w = static_cast<long>(m.cols()) * cell_px;
  const auto h = static_cast<long>(m.rows()) * cell_px;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\" shape-rendering=\"crispEdges\">\n";
  const Matrix img = display_image(m);
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      const int g = static_cast<int>(std::lround(std::clamp(img(i, j), 0.0, 1.0) * 255.0));
      svg << "<rect x=\"" << j * cell_px << "\" y=\"" << i * cell_px << "\" width=\"" << cell_px << "\" height=\""
          << cell_px << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  svg << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"" << std::max(1, cell_px / 2) << "\" points=\"";
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    if (k) svg << ' ';
    svg << path.points[k].j * cell_px + cell_px / 2 << ',' << path.points[k].i * cell_px + cell_px / 2;
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

}  // namespace cyclosync
