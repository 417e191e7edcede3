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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cyclosync/ingest.hpp"
#include "cyclosync/synth.hpp"
#include "oracles.hpp"

using namespace cyclosync;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cyclosync_ingest_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Video whose temporal gradient follows `levels`: frame t differs from frame
// t-1 by levels[t] on every pixel.
FrameSeries video_from_gradient(const std::vector<double>& levels, double base = 0.1) {
  FrameSeries v;
  double value = base;
  double sign = 1.0;
  for (double g : levels) {
    value += sign * g;
    sign = -sign;
    v.frames.push_back(Frame::Constant(4, 4, value));
  }
  return v;
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::invalid_argument;
}

}  // namespace

TEST(ContrastWindow, StepProfile) {
  std::vector<double> g(60, 0.0);
  for (std::size_t t = 10; t < 40; ++t) g[t] = 0.5;
  const auto window = extract_contrast_window(video_from_gradient(g));
  EXPECT_EQ(window.start, 10u);
  EXPECT_EQ(window.end, 40u);
}

TEST(ContrastWindow, ConstantVideoIsFlat) {
  FrameSeries v;
  for (int t = 0; t < 10; ++t) v.frames.push_back(Frame::Constant(3, 3, 0.4));
  EXPECT_EQ(error_code([&] { extract_contrast_window(v); }), Errc::signal_flat);
}

TEST(ContrastWindow, NeedsFourFrames) {
  FrameSeries v;
  for (int t = 0; t < 3; ++t) v.frames.push_back(Frame::Constant(3, 3, 0.1 * t));
  EXPECT_EQ(error_code([&] { extract_contrast_window(v); }), Errc::invalid_argument);
}

TEST(ContrastWindow, NeverFallsBackRunsToEnd) {
  std::vector<double> g(20, 0.0);
  for (std::size_t t = 12; t < 20; ++t) g[t] = 0.04;
  const auto window = extract_contrast_window(video_from_gradient(g));
  EXPECT_EQ(window.start, 12u);
  EXPECT_EQ(window.end, 20u);
}

TEST(ContrastWindow, SingleSpikeIsTooShort) {
  std::vector<double> g(20, 0.0);
  g[7] = 0.3;
  EXPECT_EQ(error_code([&] { extract_contrast_window(video_from_gradient(g)); }), Errc::window_too_short);
}

TEST(ContrastWindow, MatchesDirectScanOnRandomRamps) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    FrameSeries v;
    const int n = 30 + trial;
    const int rise = 3 + trial % 7;
    for (int t = 0; t < n; ++t) {
      Frame f(5, 6);
      const double ramp = t < rise ? 0.0 : std::min(1.0, 0.1 * (t - rise));
      for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = std::clamp(0.2 + 0.3 * ramp * u(rng), 0.0, 1.0);
      v.frames.push_back(f);
    }
    const auto [start, end] = oracle::contrast_window_scan(v);
    if (end - start < 3) continue;
    const auto w = extract_contrast_window(v);
    EXPECT_EQ(w.start, start) << "trial " << trial;
    EXPECT_EQ(w.end, end) << "trial " << trial;
  }
}

TEST(ContrastWindow, InvariantToAffineIntensityRescaling) {
  ViewConfig cfg;
  cfg.frame_size = 16;
  cfg.duration_s = 6;
  const auto view = generate_view(cfg);
  const auto base = extract_contrast_window(view.video);
  for (double a : {0.5, 0.8}) {
    FrameSeries scaled = view.video;
    for (auto& f : scaled.frames) f = (a * f.array() + 0.1).matrix();
    EXPECT_EQ(extract_contrast_window(scaled), base) << "scale " << a;
  }
  EXPECT_GT(base.end, base.start);
}

TEST(FeatureFile, RoundTripIsBitExactAtFloatWidth) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> d(0.0f, 10.0f);
  FeatureSeries s;
  s.dim = 4;
  for (int k = 0; k < 5; ++k) {
    Vector v(4);
    for (int i = 0; i < 4; ++i) v(i) = static_cast<double>(d(rng));
    s.vectors.push_back(v);
  }
  s.vectors[2](1) = static_cast<double>(1e-30f);
  s.vectors[3](0) = static_cast<double>(-3.4e38f);
  const auto path = scratch_dir("roundtrip") / "f.csfeat";
  store_feature_series(s, path);
  const auto back = load_feature_series(path);
  ASSERT_EQ(back.size(), 5u);
  ASSERT_EQ(back.dim, 4u);
  for (int k = 0; k < 5; ++k)
    for (int i = 0; i < 4; ++i) EXPECT_EQ(back.vectors[k](i), s.vectors[k](i));
}

TEST(FeatureFile, RejectsShortRow) {
  std::istringstream in("CSFEAT v1 2 4\n1 2 3 4\n1 2 3\n");
  EXPECT_EQ(error_code([&] { read_feature_series(in); }), Errc::dimension_mismatch);
}

TEST(FeatureFile, RejectsMissingRows) {
  std::istringstream in("CSFEAT v1 3 2\n1 2\n3 4\n");
  EXPECT_EQ(error_code([&] { read_feature_series(in); }), Errc::dimension_mismatch);
}

TEST(FeatureFile, RejectsBadHeaderAndNonFinite) {
  std::istringstream bad("CSFEAT v2 1 2\n1 2\n");
  EXPECT_EQ(error_code([&] { read_feature_series(bad); }), Errc::malformed_header);
  std::istringstream nan_row("CSFEAT v1 1 2\n1 nan\n");
  EXPECT_EQ(error_code([&] { read_feature_series(nan_row); }), Errc::non_finite);
  std::istringstream inf_row("CSFEAT v1 1 2\ninf 1\n");
  EXPECT_EQ(error_code([&] { read_feature_series(inf_row); }), Errc::non_finite);
}

TEST(FeatureFile, EmptyPayloadLoads) {
  std::istringstream in("CSFEAT v1 0 4\n");
  const auto s = read_feature_series(in);
  EXPECT_EQ(s.size(), 0u);
  EXPECT_EQ(s.dim, 4u);
}

TEST(EcgFile, ParsesTwoColumnCsv) {
  std::ostringstream csv;
  csv << "time_s,voltage\n";
  for (int k = 0; k < 1000; ++k) csv << k / 500.0 << ',' << std::sin(k * 0.01) << '\n';
  std::istringstream in(csv.str());
  const auto trace = read_ecg_csv(in, EcgTiming{30.0, 500.0, 0.25});
  EXPECT_EQ(trace.samples.size(), 1000u);
  EXPECT_DOUBLE_EQ(trace.ecg_hz, 500.0);
  EXPECT_DOUBLE_EQ(trace.sample_to_frame(125.0), 0.0);
  EXPECT_DOUBLE_EQ(trace.sample_to_frame(500.0), 22.5);
}

TEST(EcgFile, RejectsOutOfOrderTimestamps) {
  std::istringstream in("time_s,voltage\n0,1\n0.004,2\n0.002,3\n");
  EXPECT_EQ(error_code([&] { read_ecg_csv(in, EcgTiming{30.0, 500.0, 0.0}); }), Errc::non_monotone);
}

TEST(EcgFile, RequiresSamplingRate) {
  std::istringstream in("time_s,voltage\n0,1\n0.002,2\n");
  EXPECT_EQ(error_code([&] { read_ecg_csv(in, EcgTiming{30.0, std::nullopt, 0.0}); }), Errc::missing_field);
}

TEST(EcgFile, SyntheticTraceRoundTrips) {
  ViewConfig cfg;
  cfg.frame_size = 8;
  cfg.ecg_noise = 0.05;
  const auto view = generate_view(cfg);
  const auto path = scratch_dir("ecg") / "ecg.csv";
  store_ecg(view.ecg, path);
  const auto back = load_ecg(path, EcgTiming{view.ecg.fps, view.ecg.ecg_hz, view.ecg.frame0_time_s});
  ASSERT_EQ(back.samples.size(), view.ecg.samples.size());
  for (std::size_t k = 0; k < back.samples.size(); ++k) ASSERT_EQ(back.samples[k], view.ecg.samples[k]);
}

TEST(FrameDirectory, PgmRoundTripWithinQuantization) {
  ViewConfig cfg;
  cfg.frame_size = 12;
  cfg.duration_s = 2;
  cfg.hr_bpm = 90;
  const auto view = generate_view(cfg);
  const auto dir = scratch_dir("frames");
  store_frames(view.video, dir);
  VideoDescriptor d;
  d.video_id = "v";
  d.fps = cfg.fps;
  store_json(to_json(d), dir / "descriptor.json");
  const auto back = load_frame_series(dir);
  ASSERT_EQ(back.size(), view.video.size());
  for (std::size_t t = 0; t < back.size(); ++t) {
    EXPECT_LE((back.frames[t] - view.video.frames[t]).cwiseAbs().maxCoeff(), 0.5 / 65535.0 + 1e-12);
  }
}

TEST(FrameDirectory, ReadsAsciiPgm) {
  const auto dir = scratch_dir("ascii");
  std::ofstream(dir / "f.pgm") << "P2\n# comment\n3 2\n10\n0 5 10\n10 5 0\n";
  const auto f = load_pgm(dir / "f.pgm");
  ASSERT_EQ(f.rows(), 2);
  ASSERT_EQ(f.cols(), 3);
  EXPECT_DOUBLE_EQ(f(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(f(1, 0), 1.0);
}

TEST(FrameSeries, ValidationCatchesMismatchedFrames) {
  FrameSeries v;
  v.frames = {Frame::Zero(3, 3), Frame::Zero(3, 3), Frame::Zero(3, 4)};
  EXPECT_EQ(error_code([&] { validate(v); }), Errc::dimension_mismatch);
  v.frames.back() = Frame::Constant(3, 3, 1.5);
  EXPECT_EQ(error_code([&] { validate(v); }), Errc::invalid_argument);
}
