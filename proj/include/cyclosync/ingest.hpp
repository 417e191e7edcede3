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
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "cyclosync/error.hpp"
#include "cyclosync/types.hpp"

namespace cyclosync {

namespace fs = std::filesystem;

/// One grayscale frame, intensities in [0, 1].
using Frame = Matrix;

struct FrameSeries {
  std::vector<Frame> frames;
  double fps = 30.0;
  std::string video_id;

  std::size_t size() const noexcept { return frames.size(); }
  Eigen::Index height() const { return frames.empty() ? 0 : frames.front().rows(); }
  Eigen::Index width() const { return frames.empty() ? 0 : frames.front().cols(); }
};

inline void validate(const FrameSeries& video) {
  require(video.frames.size() >= 3, Errc::invalid_argument,
          "frame series needs at least 3 frames, got " + std::to_string(video.frames.size()));
  require(video.fps > 0 && std::isfinite(video.fps), Errc::invalid_argument, "fps must be positive");
  const auto h = video.height();
  const auto w = video.width();
  require(h > 0 && w > 0, Errc::invalid_argument, "frames must be non-empty");
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const Frame& f = video.frames[t];
    require(f.rows() == h && f.cols() == w, Errc::dimension_mismatch,
            "frame " + std::to_string(t) + " has different dimensions");
    require(f.allFinite(), Errc::non_finite, "frame " + std::to_string(t) + " has non-finite values");
    require(f.minCoeff() >= 0.0 && f.maxCoeff() <= 1.0, Errc::invalid_argument,
            "frame " + std::to_string(t) + " has intensities outside [0,1]");
  }
}

/// Half-open frame range [start, end) where contrast agent is visible.
struct ContrastWindow {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  friend bool operator==(const ContrastWindow&, const ContrastWindow&) = default;
};

/// g(t) = mean |I_t - I_{t-1}|, with g(0) = 0.
inline std::vector<double> temporal_gradient(const FrameSeries& video) {
  std::vector<double> g(video.size(), 0.0);
  for (std::size_t t = 1; t < video.size(); ++t) {
    g[t] = (video.frames[t] - video.frames[t - 1]).cwiseAbs().mean();
  }
  return g;
}

/// Frames from the first upward crossing of the mean temporal gradient to
/// the next downward crossing (or the end of the video).
inline ContrastWindow extract_contrast_window(const FrameSeries& video) {
  require(video.size() >= 4, Errc::invalid_argument, "contrast window needs at least 4 frames");
  const std::vector<double> g = temporal_gradient(video);
  double sum = 0.0;
  for (double v : g) sum += v;
  require(sum > 0.0, Errc::signal_flat, "temporal gradient is zero everywhere");
  const double mean = sum / static_cast<double>(g.size());

  std::size_t start = 0;
  while (start < g.size() && !(g[start] > mean)) ++start;
  std::size_t end = start + 1;
  while (end < g.size() && !(g[end] < mean)) ++end;

  require(end - start >= 3, Errc::window_too_short,
          "contrast window [" + std::to_string(start) + ", " + std::to_string(end) +
              ") is shorter than 3 frames");
  return {start, end};
}

// ---------------------------------------------------------------------------
// Numeric text helpers shared by the CSFEAT / CSMAT / CSMLP formats.

namespace detail {

inline std::string format_float(float value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string format_double(double value) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<float> parse_float(std::string_view token) {
  float value = 0.0f;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::optional<std::size_t> parse_size(std::string_view token) {
  std::size_t value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  require(in.good(), Errc::io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  require(out.good(), Errc::io, "cannot write " + path.string());
  return out;
}

/// Reads `rows` lines of `cols` floats. `allow_nan` admits the literal "nan"
/// (masked ground-truth cells) and nothing else non-finite.
inline std::vector<double> read_float_rows(std::istream& in, std::size_t rows, std::size_t cols,
                                           const std::string& what, bool allow_nan = false) {
  std::vector<double> values;
  values.reserve(rows * cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    require(static_cast<bool>(std::getline(in, line)), Errc::dimension_mismatch,
            what + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
    const auto tokens = split_ws(line);
    require(tokens.size() == cols, Errc::dimension_mismatch,
            what + ": row " + std::to_string(r) + " has " + std::to_string(tokens.size()) +
                " values, expected " + std::to_string(cols));
    for (auto token : tokens) {
      if (allow_nan && token == "nan") {
        values.push_back(std::nan(""));
        continue;
      }
      auto v = parse_float(token);
      require(v.has_value(), Errc::malformed_header,
              what + ": cannot parse value '" + std::string(token) + "'");
      require(std::isfinite(*v), Errc::non_finite, what + ": non-finite value in row " + std::to_string(r));
      values.push_back(static_cast<double>(*v));
    }
  }
  while (std::getline(in, line)) {
    require(split_ws(line).empty(), Errc::dimension_mismatch, what + ": trailing data after declared rows");
  }
  return values;
}

inline void write_float_row(std::ostream& out, const double* values, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (k) out << ' ';
    if (std::isnan(values[k])) {
      out << "nan";
    } else {
      out << format_float(static_cast<float>(values[k]));
    }
  }
  out << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature series (CSFEAT v1).

/// Per-window feature vectors of one video. Vector k belongs to the window
/// whose last frame is `first_frame + k`.
struct FeatureSeries {
  std::vector<Vector> vectors;
  std::size_t dim = 0;
  std::size_t first_frame = 0;

  std::size_t size() const noexcept { return vectors.size(); }
};

inline void store_feature_series(const FeatureSeries& series, const fs::path& path) {
  auto out = detail::open_out(path);
  out << "CSFEAT v1 " << series.size() << ' ' << series.dim << '\n';
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Vector& v = series.vectors[k];
    require(static_cast<std::size_t>(v.size()) == series.dim, Errc::dimension_mismatch,
            "feature vector " + std::to_string(k) + " has wrong dimension");
    require(v.allFinite(), Errc::non_finite, "feature vector " + std::to_string(k) + " is not finite");
    detail::write_float_row(out, v.data(), series.dim);
  }
  require(out.good(), Errc::io, "write failed for " + path.string());
}

inline FeatureSeries read_feature_series(std::istream& in, const std::string& what = "CSFEAT") {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::malformed_header, what + ": empty file");
  const auto header = detail::split_ws(line);
  require(header.size() == 4 && header[0] == "CSFEAT" && header[1] == "v1", Errc::malformed_header,
          what + ": expected 'CSFEAT v1 <count> <dim>'");
  const auto count = detail::parse_size(header[2]);
  const auto dim = detail::parse_size(header[3]);
  require(count.has_value() && dim.has_value() && *dim > 0, Errc::malformed_header,
          what + ": bad count or dim in header");
  const auto values = detail::read_float_rows(in, *count, *dim, what);
  FeatureSeries series;
  series.dim = *dim;
  series.vectors.reserve(*count);
  for (std::size_t k = 0; k < *count; ++k) {
    series.vectors.push_back(Eigen::Map<const Vector>(values.data() + k * *dim, static_cast<Eigen::Index>(*dim)));
  }
  return series;
}

inline FeatureSeries load_feature_series(const fs::path& path) {
  auto in = detail::open_in(path);
  return read_feature_series(in, path.string());
}

// ---------------------------------------------------------------------------
// ECG traces.

struct EcgTrace {
  std::vector<double> samples;
  double ecg_hz = 0.0;
  /// Video frame 0 on the ECG clock.
  double frame0_time_s = 0.0;
  double fps = 0.0;
  /// ECG-clock time of samples[0].
  double start_time_s = 0.0;

  double sample_time(double index) const noexcept { return start_time_s + index / ecg_hz; }
  double sample_to_frame(double index) const noexcept { return (sample_time(index) - frame0_time_s) * fps; }
};

inline void validate(const EcgTrace& trace) {
  require(trace.ecg_hz > 0 && std::isfinite(trace.ecg_hz), Errc::invalid_argument, "ecg_hz must be positive");
  require(trace.fps > 0 && std::isfinite(trace.fps), Errc::invalid_argument, "fps must be positive");
  require(trace.samples.size() >= 2, Errc::invalid_argument, "ECG trace needs at least 2 samples");
  for (double s : trace.samples) require(std::isfinite(s), Errc::non_finite, "ECG sample is not finite");
}

/// Sidecar timing for an ECG file; fields may come from JSON or CLI flags.
struct EcgTiming {
  std::optional<double> fps;
  std::optional<double> ecg_hz;
  std::optional<double> frame0_time_s;
};

inline EcgTrace read_ecg_csv(std::istream& in, const EcgTiming& timing, const std::string& what = "ECG") {
  require(timing.ecg_hz.has_value(), Errc::missing_field, what + ": missing sampling rate (ecg_hz)");
  require(timing.fps.has_value(), Errc::missing_field, what + ": missing video frame rate (fps)");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::malformed_header, what + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "time_s,voltage", Errc::malformed_header, what + ": expected header 'time_s,voltage'");

  EcgTrace trace;
  trace.ecg_hz = *timing.ecg_hz;
  trace.fps = *timing.fps;
  trace.frame0_time_s = timing.frame0_time_s.value_or(0.0);
  double previous = 0.0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, Errc::malformed_header,
            what + ": row " + std::to_string(row) + " is not 'time,voltage'");
    auto time = detail::parse_double(std::string_view(line).substr(0, comma));
    auto volt = detail::parse_double(std::string_view(line).substr(comma + 1));
    require(time.has_value() && volt.has_value(), Errc::malformed_header,
            what + ": cannot parse row " + std::to_string(row));
    require(std::isfinite(*time) && std::isfinite(*volt), Errc::non_finite,
            what + ": non-finite value in row " + std::to_string(row));
    if (row == 0) {
      trace.start_time_s = *time;
    } else {
      require(*time > previous, Errc::non_monotone,
              what + ": timestamps not increasing at row " + std::to_string(row));
    }
    previous = *time;
    trace.samples.push_back(*volt);
    ++row;
  }
  validate(trace);
  return trace;
}

inline EcgTrace load_ecg(const fs::path& path, const EcgTiming& timing) {
  auto in = detail::open_in(path);
  return read_ecg_csv(in, timing, path.string());
}

inline void store_ecg(const EcgTrace& trace, const fs::path& path) {
  auto out = detail::open_out(path);
  out << "time_s,voltage\n";
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    out << detail::format_double(trace.sample_time(static_cast<double>(k))) << ','
        << detail::format_double(trace.samples[k]) << '\n';
  }
  require(out.good(), Errc::io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Video directories: frame_%05d.pgm + descriptor.json (+ ecg.csv).

struct VideoDescriptor {
  std::string video_id;
  std::string patient_id;
  double fps = 30.0;
  std::optional<double> ecg_hz;
  std::optional<double> frame0_time_s;

  EcgTiming timing() const { return {fps, ecg_hz, frame0_time_s}; }
};

inline nlohmann::json to_json(const VideoDescriptor& d) {
  nlohmann::json j;
  j["video_id"] = d.video_id;
  j["patient_id"] = d.patient_id;
  j["fps"] = d.fps;
  if (d.ecg_hz) j["ecg_hz"] = *d.ecg_hz;
  if (d.frame0_time_s) j["frame0_time_s"] = *d.frame0_time_s;
  return j;
}

inline VideoDescriptor descriptor_from_json(const nlohmann::json& j) {
  require(j.is_object(), Errc::malformed_header, "descriptor must be a JSON object");
  VideoDescriptor d;
  require(j.contains("fps") && j["fps"].is_number(), Errc::missing_field, "descriptor: missing fps");
  d.fps = j["fps"].get<double>();
  if (j.contains("video_id")) d.video_id = j["video_id"].get<std::string>();
  if (j.contains("patient_id")) d.patient_id = j["patient_id"].get<std::string>();
  if (j.contains("ecg_hz")) d.ecg_hz = j["ecg_hz"].get<double>();
  if (j.contains("frame0_time_s")) d.frame0_time_s = j["frame0_time_s"].get<double>();
  return d;
}

inline nlohmann::json load_json(const fs::path& path) {
  auto in = detail::open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::malformed_header, path.string() + ": " + e.what());
  }
}

inline void store_json(const nlohmann::json& j, const fs::path& path) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
  require(out.good(), Errc::io, "write failed for " + path.string());
}

inline VideoDescriptor load_descriptor(const fs::path& path) { return descriptor_from_json(load_json(path)); }

/// Reads a binary (P5) or ASCII (P2) graymap, normalized by its maxval.
inline Frame load_pgm(const fs::path& path) {
  auto in = detail::open_in(path, std::ios::in | std::ios::binary);
  auto next_token = [&]() {
    std::string token;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!token.empty()) break;
        continue;
      }
      token.push_back(c);
    }
    return token;
  };
  const std::string magic = next_token();
  require(magic == "P5" || magic == "P2", Errc::malformed_header, path.string() + ": not a PGM file");
  const auto w = detail::parse_size(next_token());
  const auto h = detail::parse_size(next_token());
  const auto maxval = detail::parse_size(next_token());
  require(w && h && maxval && *w > 0 && *h > 0 && *maxval > 0 && *maxval < 65536, Errc::malformed_header,
          path.string() + ": bad PGM header");
  Frame frame(static_cast<Eigen::Index>(*h), static_cast<Eigen::Index>(*w));
  const double scale = 1.0 / static_cast<double>(*maxval);
  for (Eigen::Index r = 0; r < frame.rows(); ++r) {
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
      std::size_t v = 0;
      if (magic == "P2") {
        auto parsed = detail::parse_size(next_token());
        require(parsed.has_value(), Errc::dimension_mismatch, path.string() + ": truncated PGM");
        v = *parsed;
      } else if (*maxval < 256) {
        char b;
        require(static_cast<bool>(in.get(b)), Errc::dimension_mismatch, path.string() + ": truncated PGM");
        v = static_cast<unsigned char>(b);
      } else {
        char hi, lo;
        require(static_cast<bool>(in.get(hi)) && static_cast<bool>(in.get(lo)), Errc::dimension_mismatch,
                path.string() + ": truncated PGM");
        v = (static_cast<std::size_t>(static_cast<unsigned char>(hi)) << 8) | static_cast<unsigned char>(lo);
      }
      require(v <= *maxval, Errc::invalid_argument, path.string() + ": pixel exceeds maxval");
      frame(r, c) = static_cast<double>(v) * scale;
    }
  }
  return frame;
}

/// Writes a binary PGM with the given maxval (255 or 65535). Values are
/// clamped to [0, 1] before quantization.
inline void store_pgm(const Matrix& image, const fs::path& path, unsigned maxval = 65535) {
  auto out = detail::open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << image.cols() << ' ' << image.rows() << '\n' << maxval << '\n';
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * maxval));
      if (maxval < 256) {
        out.put(static_cast<char>(q));
      } else {
        out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
      }
    }
  }
  require(out.good(), Errc::io, "write failed for " + path.string());
}

inline std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05zu.pgm", index);
  return buf;
}

inline FrameSeries load_frame_series(const fs::path& dir) {
  const VideoDescriptor d = load_descriptor(dir / "descriptor.json");
  FrameSeries video;
  video.fps = d.fps;
  video.video_id = d.video_id.empty() ? dir.filename().string() : d.video_id;
  for (std::size_t t = 0;; ++t) {
    const fs::path p = dir / frame_filename(t);
    if (!fs::exists(p)) break;
    video.frames.push_back(load_pgm(p));
  }
  validate(video);
  return video;
}

inline void store_frames(const FrameSeries& video, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < video.size(); ++t) store_pgm(video.frames[t], dir / frame_filename(t));
}

}  // namespace cyclosync
