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

#include <gtest/gtest.h>

#include "cyclosync/synth.hpp"

using namespace cyclosync;

namespace {

ViewConfig small(double hr, double fps, double duration) {
  ViewConfig cfg;
  cfg.hr_bpm = hr;
  cfg.fps = fps;
  cfg.duration_s = duration;
  cfg.frame_size = 12;
  return cfg;
}

}  // namespace

TEST(Synth, OneHertzBeatAtThirtyFps) {
  const auto view = generate_view(small(60, 30, 6));
  EXPECT_EQ(view.video.size(), 180u);
  EXPECT_EQ(view.peaks.peaks_frames, (std::vector<double>{0, 30, 60, 90, 120, 150}));
}

TEST(Synth, PhasePeriodTwelveFrames) {
  const auto view = generate_view(small(75, 15, 8));
  for (std::size_t t = 0; t + 12 < view.phase.size(); ++t) {
    EXPECT_NEAR(view.phase.phases[t + 12], view.phase.phases[t], 1e-12) << t;
  }
  EXPECT_DOUBLE_EQ(view.phase.phases[3], 0.25);
}

TEST(Synth, SeedsChangeTextureNotPhase) {
  auto ca = small(70, 30, 4);
  auto cb = ca;
  cb.texture_seed = 99;
  const auto a = generate_view(ca);
  const auto b = generate_view(cb);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_GT((a.video.frames[40] - b.video.frames[40]).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Synth, BitReproducible) {
  auto cfg = small(88, 30, 3);
  cfg.noise_sigma = 0.05;
  const auto a = generate_view(cfg);
  const auto b = generate_view(cfg);
  for (std::size_t t = 0; t < a.video.size(); ++t) ASSERT_EQ(a.video.frames[t], b.video.frames[t]);
  EXPECT_EQ(a.ecg.samples, b.ecg.samples);
  EXPECT_EQ(a.ecg_peaks.peaks_frames, b.ecg_peaks.peaks_frames);
}

TEST(Synth, PhaseAgreesWithPeakList) {
  for (double hr : {55.0, 72.0, 130.0}) {
    const auto view = generate_view(small(hr, 30, 5));
    const auto recomputed = compute_phase(view.peaks, view.video.size());
    for (std::size_t t = 0; t < recomputed.size(); ++t) {
      if (!recomputed.is_valid(t)) continue;
      EXPECT_EQ(recomputed.phases[t], view.phase.phases[t]) << "hr " << hr << " frame " << t;
    }
    EXPECT_EQ(view.phase.valid_count(), view.video.size());
  }
}

TEST(Synth, NoiselessFramesArePeriodic) {
  auto cfg = small(60, 30, 4);
  cfg.contrast_envelope = false;
  const auto view = generate_view(cfg);
  for (std::size_t t = 0; t + 30 < view.video.size(); ++t) EXPECT_EQ(view.video.frames[t], view.video.frames[t + 30]);
  EXPECT_NE(view.video.frames[0], view.video.frames[15]);
}

TEST(Synth, MotionDistinguishesMirroredPhases) {
  auto cfg = small(60, 30, 2);
  cfg.contrast_envelope = false;
  const auto view = generate_view(cfg);
  EXPECT_GT((view.video.frames[6] - view.video.frames[24]).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Synth, EnvelopeHasDarkLeadIn) {
  const auto view = generate_view(small(70, 30, 8));
  const auto mean_dark = [&](std::size_t t) { return 1.0 - view.video.frames[t].mean(); };
  EXPECT_LT(mean_dark(2), mean_dark(120));
  EXPECT_LT(mean_dark(237), mean_dark(120));
}

TEST(Synth, RejectsInvalidRanges) {
  EXPECT_THROW(generate_view(small(20, 30, 8)), Error);
  EXPECT_THROW(generate_view(small(300, 30, 8)), Error);
  EXPECT_THROW(generate_view(small(60, 0, 8)), Error);
  EXPECT_THROW(generate_view(small(60, 30, 1.5)), Error);
}

TEST(SynthPair, BiplaneSharesPhase) {
  PairConfig cfg;
  cfg.frame_size = 8;
  cfg.biplane = true;
  const auto pair = generate_pair(cfg);
  EXPECT_EQ(pair.a.phase, pair.b.phase);
  EXPECT_NE(pair.a.video.frames[50], pair.b.video.frames[50]);
}

TEST(SynthPair, IndependentRates) {
  PairConfig cfg;
  cfg.frame_size = 8;
  const auto pair = generate_pair(cfg);
  EXPECT_NEAR(pair.a.phase.phases[6], 6.0 * 70.0 / 1800.0, 1e-12);
  EXPECT_NEAR(pair.b.phase.phases[6], 6.0 * 85.0 / 1800.0, 1e-12);
  EXPECT_EQ(pair.a.video.video_id, "a");
  EXPECT_EQ(pair.b.video.video_id, "b");
}
