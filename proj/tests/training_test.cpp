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
#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "cyclosync/synth.hpp"
#include "cyclosync/training.hpp"
#include "oracles.hpp"

using namespace cyclosync;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

PairTargets targets(const Matrix& y) { return PairTargets{y, {}}; }

TrainingSet small_set(std::size_t videos, std::size_t size = 8, double duration = 3.0) {
  TrainingSet set;
  for (std::size_t k = 0; k < videos; ++k) {
    ViewConfig cfg;
    cfg.hr_bpm = 60.0 + 10.0 * static_cast<double>(k);
    cfg.frame_size = size;
    cfg.duration_s = duration;
    cfg.texture_seed = 40 + k;
    cfg.noise_sigma = 0.02;
    cfg.contrast_envelope = false;
    const auto view = generate_view(cfg);
    set.videos.push_back(make_training_video(view.video, view.peaks, "p" + std::to_string(k / 2)));
  }
  return set;
}

}  // namespace

TEST(SoftPairLoss, HandComputedCases) {
  EXPECT_NEAR(soft_pair_loss({vec({1, 0}), vec({0, 1})}, targets(Matrix::Identity(2, 2))), 0.125, 1e-12);
  const std::vector<Vector> same(5, vec({0.3, -2.0, 1.0}));
  EXPECT_EQ(soft_pair_loss(same, targets(Matrix::Ones(5, 5))), 0.0);
  for (int n : {2, 3, 4}) {
    std::vector<Vector> basis;
    for (int k = 0; k < n; ++k) basis.push_back(Vector::Unit(n, k) * (k + 1));
    EXPECT_NEAR(soft_pair_loss(basis, targets(Matrix::Constant(n, n, 0.5))), 0.25 / n, 1e-15);
  }
}

TEST(SoftPairLoss, ExclusionsLeaveNumeratorAndDenominator) {
  PairTargets t{Matrix::Identity(2, 2), {0, 1, 1, 0}};
  EXPECT_EQ(soft_pair_loss({vec({1, 0}), vec({0, 1})}, t), 0.0);
  t.excluded = {0, 1, 0, 0};
  EXPECT_NEAR(soft_pair_loss({vec({1, 0}), vec({0, 1})}, t), 0.25 / 3.0, 1e-15);
  t.excluded = {1, 1, 1, 1};
  try {
    soft_pair_loss({vec({1, 0}), vec({0, 1})}, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_valid_pairs);
  }
}

TEST(SoftPairLoss, ZeroFeatureIsRejected) {
  try {
    soft_pair_loss({vec({0, 0}), vec({0, 1})}, targets(Matrix::Identity(2, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_norm);
  }
}

TEST(SoftPairLoss, SymmetricUnderBatchPermutation) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 5;
    std::vector<Vector> f;
    for (int k = 0; k < n; ++k) f.push_back(Vector::NullaryExpr(4, [&] { return d(rng); }));
    Matrix y(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) y(i, j) = y(j, i) = u(rng);
    const double base = soft_pair_loss(f, targets(y));
    EXPECT_GE(base, 0.0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vector> fp;
    Matrix yp(n, n);
    for (int i = 0; i < n; ++i) {
      fp.push_back(f[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
      for (int j = 0; j < n; ++j) yp(i, j) = y(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    EXPECT_NEAR(soft_pair_loss(fp, targets(yp)), base, 1e-14);
  }
}

TEST(Gradient, FeatureGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> d;
  std::vector<Vector> f;
  for (int k = 0; k < 5; ++k) f.push_back(Vector::NullaryExpr(3, [&] { return d(rng); }));
  Matrix y = Matrix::Random(5, 5).cwiseAbs();
  y = 0.5 * (y + y.transpose());
  std::vector<Vector> grad;
  soft_pair_loss(f, targets(y), &grad);
  for (std::size_t k = 0; k < 5; ++k) {
    for (Eigen::Index c = 0; c < 3; ++c) {
      auto up = f, down = f;
      up[k](c) += 1e-6;
      down[k](c) -= 1e-6;
      const double fd = (soft_pair_loss(up, targets(y)) - soft_pair_loss(down, targets(y))) / 2e-6;
      EXPECT_NEAR(grad[k](c), fd, 1e-7);
    }
  }
}

TEST(Gradient, NetworkGradientMatchesFiniteDifferences) {
  // Small frames keep the per-parameter probe loop fast; the acceptance
  // suite repeats this at full size.
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const ToyMlp mlp = ToyMlp::initialize(3 * 4 * 4, 6, 4, rng);
    std::uniform_real_distribution<double> pixel(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    std::vector<Vector> inputs;
    std::vector<double> phases;
    for (int k = 0; k < 6; ++k) {
      inputs.push_back(Vector::NullaryExpr(48, [&] { return pixel(rng); }));
      phases.push_back(phase(rng));
    }
    PairTargets t{Matrix(6, 6), {}};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) t.y(i, j) = synchronization_level(phases[i], phases[j]);
    const auto analytic = loss_gradient(mlp, inputs, t).gradient.flatten();
    const auto numeric = oracle::finite_difference_gradient(
        mlp, [&](const ToyMlp& m) { return batch_loss(m, inputs, t); }, 1e-5);
    for (Eigen::Index k = 0; k < analytic.size(); ++k) {
      EXPECT_LT(std::abs(analytic(k) - numeric(k)) / std::max(1.0, std::abs(analytic(k))), 1e-4)
          << "seed " << seed << " parameter " << k;
    }
  }
}

TEST(Gradient, DropoutGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const ToyMlp mlp = ToyMlp::initialize(12, 8, 3, rng);
  std::vector<Vector> inputs;
  for (int k = 0; k < 4; ++k) inputs.push_back(Vector::Random(12));
  PairTargets t{Matrix::Constant(4, 4, 0.3), {}};
  t.y.diagonal().setOnes();
  const auto masks = draw_dropout(4, 8, 0.3, rng);
  const auto analytic = loss_gradient(mlp, inputs, t, masks).gradient.flatten();
  const auto numeric = oracle::finite_difference_gradient(
      mlp, [&](const ToyMlp& m) { return loss_gradient(m, inputs, t, masks).loss; }, 1e-5);
  for (Eigen::Index k = 0; k < analytic.size(); ++k) {
    EXPECT_LT(std::abs(analytic(k) - numeric(k)) / std::max(1.0, std::abs(analytic(k))), 1e-4);
  }
}

TEST(Gradient, VanishesAtPerfectFit) {
  std::mt19937_64 rng(4);
  ToyMlp mlp = ToyMlp::initialize(12, 5, 3, rng);
  mlp.w1.setZero();
  mlp.b1 = Vector::LinSpaced(5, -1.0, 1.0);
  std::vector<Vector> inputs;
  for (int k = 0; k < 6; ++k) inputs.push_back(Vector::Random(12));
  const auto lg = loss_gradient(mlp, inputs, targets(Matrix::Ones(6, 6)));
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_LT(lg.gradient.flatten().norm(), 1e-8);
}

TEST(Gradient, ConstantZeroOutputHitsNormGuard) {
  const ToyMlp mlp = ToyMlp::zeros(12, 5, 3);
  std::vector<Vector> inputs(3, Vector::Ones(12));
  try {
    loss_gradient(mlp, inputs, targets(Matrix::Ones(3, 3)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_norm);
  }
  std::mt19937_64 rng(1);
  const ToyMlp init = ToyMlp::initialize(12, 5, 3, rng);
  EXPECT_TRUE((init.b2.array() != 0.0).all());
}

TEST(Batch, SingleVideoWithoutCycleLimit) {
  const auto set = small_set(4);
  TrainConfig cfg;
  cfg.batch_size = 10;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = sample_batch(set, cfg, rng);
    ASSERT_EQ(b.items.size(), 10u);
    EXPECT_TRUE(b.targets.excluded.empty());
    std::set<std::size_t> frames;
    for (const auto& it : b.items) {
      EXPECT_EQ(it.video, b.items.front().video);
      EXPECT_GE(it.frame, 2u);
      EXPECT_TRUE(set.videos[it.video].phase.is_valid(it.frame));
      frames.insert(it.frame);
    }
    EXPECT_EQ(frames.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        const auto& v = set.videos[b.items[i].video];
        EXPECT_EQ(b.targets.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  synchronization_level(v.phase.phases[b.items[i].frame], v.phase.phases[b.items[j].frame]));
      }
    }
  }
}

TEST(Batch, CycleLimitExcludesDistantPairs) {
  const auto set = small_set(1, 4, 6.0);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_cycles = 2.02;
  std::mt19937_64 rng(5);
  std::size_t excluded = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto b = sample_batch(set, cfg, rng);
    const auto& v = set.videos[0];
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 16; ++j) {
        const double apart = std::abs(v.cycle[b.items[i].frame] - v.cycle[b.items[j].frame]);
        EXPECT_EQ(b.targets.is_excluded(i, j), apart > 2.02);
        excluded += b.targets.is_excluded(i, j) ? 1 : 0;
      }
    }
  }
  EXPECT_GT(excluded, 0u);
  // Two frames three cycles apart (60 bpm, 30 fps).
  EXPECT_NEAR(set.videos[0].cycle[95] - set.videos[0].cycle[5], 3.0, 1e-12);
}

TEST(Batch, InterVideoPairsStayWithinPatient) {
  const auto set = small_set(4);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.inter_video_pairs = true;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = sample_batch(set, cfg, rng);
    std::set<std::size_t> videos;
    for (const auto& it : b.items) videos.insert(it.video);
    ASSERT_EQ(videos.size(), 2u);
    EXPECT_EQ(set.videos[*videos.begin()].patient_id, set.videos[*videos.rbegin()].patient_id);
  }
}

TEST(Batch, InsufficientFrames) {
  const auto set = small_set(1, 4, 2.0);
  TrainConfig cfg;
  cfg.batch_size = 64;
  std::mt19937_64 rng(1);
  try {
    sample_batch(set, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_frames);
  }
}

TEST(Training, ZeroLearningRateKeepsParameters) {
  const auto set = small_set(3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  cfg.hidden = 6;
  const auto r = train(set, cfg);
  std::mt19937_64 rng(cfg.seed);
  const ToyMlp init = ToyMlp::initialize(3 * 8 * 8, 6, 4, rng);
  EXPECT_EQ(r.model.flatten(), init.flatten());
  ASSERT_EQ(r.loss_history.size(), 9u);
  // Replaying the sampler gives the same losses for the unchanged model.
  for (double loss : r.loss_history) {
    const auto b = sample_batch(set, cfg, rng);
    EXPECT_EQ(loss, loss_gradient(init, b.inputs, b.targets).loss);
  }
}

TEST(Training, SeedFixedRunsAreBitIdentical) {
  const auto set = small_set(2);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.hidden = 8;
  cfg.data_augmentation = true;
  cfg.dropout_rate = 0.183;
  cfg.max_cycles = 2.02;
  const auto a = train(set, cfg);
  const auto b = train(set, cfg);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(a.model.flatten(), b.model.flatten());
  cfg.seed = 2;
  EXPECT_NE(train(set, cfg).loss_history, a.loss_history);
}

TEST(Training, DropoutSettingsBothTrain) {
  const auto set = small_set(2);
  for (double dr : {0.0, 0.183}) {
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.hidden = 8;
    cfg.dropout_rate = dr;
    const auto r = train(set, cfg);
    for (double l : r.loss_history) EXPECT_TRUE(std::isfinite(l));
    EXPECT_TRUE(r.model.all_finite());
  }
}

TEST(Training, LossDecreasesOnSmallSet) {
  const auto set = small_set(4);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.hidden = 16;
  const auto r = train(set, cfg);
  double first = 0.0;
  for (std::size_t k = 0; k < r.batches_per_epoch; ++k) first += r.loss_history[k];
  first /= static_cast<double>(r.batches_per_epoch);
  EXPECT_LT(r.final_loss(), 0.5 * first);
}

TEST(Training, DivergenceIsReported) {
  const auto set = small_set(2);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 2;
  cfg.learning_rate = 1.7e308;
  try {
    train(set, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::divergence);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(Training, ConfigValidation) {
  TrainConfig cfg;
  cfg.batch_size = 1;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.dropout_rate = 1.0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.max_cycles = -1;
  EXPECT_THROW(validate(cfg), Error);
}

TEST(MlpFile, RoundTripAtFloatWidth) {
  std::mt19937_64 rng(6);
  const ToyMlp m = ToyMlp::initialize(12, 5, 3, rng);
  const auto path = std::filesystem::temp_directory_path() / "cyclosync_mlp.csmlp";
  store_mlp(m, path);
  const ToyMlp back = load_mlp(path);
  EXPECT_EQ(back.flatten(), m.flatten().cast<float>().cast<double>());
  EXPECT_EQ(back.input_size(), 12u);
  EXPECT_EQ(back.output_size(), 3u);
}
