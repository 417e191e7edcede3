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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cyclosync/ecg.hpp"
#include "cyclosync/embedding.hpp"
#include "cyclosync/error.hpp"
#include "cyclosync/matrix.hpp"
#include "cyclosync/mlp.hpp"
#include "cyclosync/phase.hpp"

namespace cyclosync {

/// Pairwise targets for a mini-batch. `excluded` is empty or holds one flag
/// per (i, j), row-major; flagged pairs do not enter the loss.
struct PairTargets {
  Matrix y;
  std::vector<std::uint8_t> excluded;

  bool is_excluded(std::size_t i, std::size_t j) const noexcept {
    return !excluded.empty() && excluded[i * static_cast<std::size_t>(y.cols()) + j] != 0;
  }
};

/// Mean over valid pairs of (0.5 (cos_ij + 1) - y_ij)^2. With no exclusions
/// the denominator is N^2. If `grad` is given it receives dLoss/dFeature.
inline double soft_pair_loss(const std::vector<Vector>& features, const PairTargets& targets,
                             std::vector<Vector>* grad = nullptr) {
  const std::size_t n = features.size();
  require(n > 0, Errc::no_valid_pairs, "empty batch");
  require(static_cast<std::size_t>(targets.y.rows()) == n && static_cast<std::size_t>(targets.y.cols()) == n,
          Errc::dimension_mismatch, "target matrix must be N x N");
  require(targets.excluded.empty() || targets.excluded.size() == n * n, Errc::dimension_mismatch,
          "exclusion mask must be N x N");

  std::vector<Vector> unit(n);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(features[i].allFinite(), Errc::non_finite, "feature " + std::to_string(i) + " is not finite");
    norms[i] = features[i].norm();
    require(norms[i] > 0.0, Errc::zero_norm, "feature " + std::to_string(i) + " has zero norm");
    unit[i] = features[i] / norms[i];
  }

  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) valid += targets.is_excluded(i, j) ? 0 : 1;
  require(valid > 0, Errc::no_valid_pairs, "every pair in the batch is excluded");
  const double inv = 1.0 / static_cast<double>(valid);

  // residual(i, j) = 0.5 (cos + 1) - y; dLoss/dcos = residual / valid.
  Matrix dcos = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (targets.is_excluded(i, j)) continue;
      const double c = std::clamp(unit[i].dot(unit[j]), -1.0, 1.0);
      const double r = 0.5 * (c + 1.0) - targets.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      loss += r * r;
      dcos(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r * inv;
    }
  }
  loss *= inv;

  if (grad) {
    grad->assign(n, Vector());
    for (std::size_t i = 0; i < n; ++i) {
      Vector du = Vector::Zero(features[i].size());
      for (std::size_t j = 0; j < n; ++j) {
        const double w = dcos(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                         dcos(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        du += w * unit[j];
      }
      // Jacobian of f / |f| is (I - u u^T) / |f|.
      (*grad)[i] = (du - unit[i] * unit[i].dot(du)) / norms[i];
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training data.

struct TrainConfig {
  std::size_t batch_size = 12;
  /// Pairs more than this many cardiac cycles apart are excluded; 0 = off.
  double max_cycles = 0.0;
  bool inter_video_pairs = false;
  double dropout_rate = 0.0;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 200;
  /// Mini-batches per epoch; 0 = one per training video.
  std::size_t batches_per_epoch = 0;
  std::size_t hidden = 32;
  std::size_t fc = 4;
  std::uint64_t seed = 1;
  bool data_augmentation = false;
};

inline void validate(const TrainConfig& cfg) {
  require(cfg.batch_size >= 2, Errc::invalid_argument, "batch size must be at least 2");
  require(cfg.learning_rate >= 0.0 && std::isfinite(cfg.learning_rate), Errc::invalid_argument,
          "learning rate must be non-negative");
  require(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0, Errc::invalid_argument, "dropout must be in [0, 1)");
  require(cfg.max_cycles >= 0.0, Errc::invalid_argument, "max cycles must be non-negative");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, Errc::invalid_argument, "momentum must be in [0, 1)");
  require(cfg.hidden > 0 && cfg.fc > 0, Errc::invalid_argument, "layer sizes must be positive");
}

struct TrainingVideo {
  FrameSeries video;
  PhaseTrack phase;
  /// Continuous cycle coordinate per frame (peak index + phase).
  std::vector<double> cycle;
  std::string patient_id;
  /// Frames t with t-2, t-1 available, a valid phase, inside the contrast window.
  std::vector<std::size_t> usable;
};

inline TrainingVideo make_training_video(FrameSeries video, const PeakList& peaks, std::string patient_id,
                                         std::optional<ContrastWindow> window = std::nullopt) {
  validate(video);
  TrainingVideo tv;
  tv.phase = compute_phase(peaks, video.size());
  tv.cycle = cycle_position(peaks, video.size());
  tv.patient_id = std::move(patient_id);
  const ContrastWindow w = window.value_or(ContrastWindow{0, video.size()});
  require(w.end <= video.size(), Errc::out_of_bounds, "contrast window extends past the video");
  for (std::size_t t = std::max<std::size_t>(w.start + 2, 2); t < w.end; ++t) {
    if (tv.phase.is_valid(t)) tv.usable.push_back(t);
  }
  tv.video = std::move(video);
  return tv;
}

struct TrainingSet {
  std::vector<TrainingVideo> videos;

  Eigen::Index frame_height() const { return videos.empty() ? 0 : videos.front().video.height(); }
  Eigen::Index frame_width() const { return videos.empty() ? 0 : videos.front().video.width(); }
};

struct BatchItem {
  std::size_t video = 0;
  std::size_t frame = 0;
};

struct Batch {
  std::vector<BatchItem> items;
  std::vector<Vector> inputs;
  PairTargets targets;
};

namespace train_detail {

template <typename Rng>
std::vector<std::size_t> sample_distinct(const std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = pool[idx[i]];
  return out;
}

inline Vector flip_horizontal(const Vector& x, Eigen::Index h, Eigen::Index w) {
  Vector out(x.size());
  const Eigen::Index plane = h * w;
  for (Eigen::Index k = 0; k < 3; ++k)
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c) out(k * plane + r * w + c) = x(k * plane + r * w + (w - 1 - c));
  return out;
}

}  // namespace train_detail

/// N distinct frames from one random video (or split across two videos of
/// one patient with inter-video pairs), their targets, and MC exclusions.
template <typename Rng>
Batch sample_batch(const TrainingSet& set, const TrainConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.batch_size;
  require(n >= 2, Errc::invalid_argument, "batch size must be at least 2");
  Batch batch;

  if (!cfg.inter_video_pairs) {
    std::vector<std::size_t> eligible;
    for (std::size_t v = 0; v < set.videos.size(); ++v)
      if (set.videos[v].usable.size() >= n) eligible.push_back(v);
    require(!eligible.empty(), Errc::insufficient_frames,
            "no video has " + std::to_string(n) + " usable frames");
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const std::size_t v = eligible[pick(rng)];
    for (std::size_t f : train_detail::sample_distinct(set.videos[v].usable, n, rng)) batch.items.push_back({v, f});
  } else {
    const std::size_t half_a = (n + 1) / 2;
    const std::size_t half_b = n / 2;
    // Patients in first-seen order, each with its eligible videos.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> patients;
    for (std::size_t v = 0; v < set.videos.size(); ++v) {
      if (set.videos[v].usable.size() < half_a) continue;
      auto it = std::find_if(patients.begin(), patients.end(),
                             [&](const auto& p) { return p.first == set.videos[v].patient_id; });
      if (it == patients.end()) {
        patients.push_back({set.videos[v].patient_id, {v}});
      } else {
        it->second.push_back(v);
      }
    }
    std::erase_if(patients, [](const auto& p) { return p.second.size() < 2; });
    require(!patients.empty(), Errc::insufficient_frames,
            "inter-video pairs need a patient with two videos of " + std::to_string(half_a) + " usable frames");
    std::uniform_int_distribution<std::size_t> pick_patient(0, patients.size() - 1);
    const auto& videos = patients[pick_patient(rng)].second;
    const auto chosen = train_detail::sample_distinct(videos, 2, rng);
    const auto frames_a = train_detail::sample_distinct(set.videos[chosen[0]].usable, half_a, rng);
    const auto frames_b = train_detail::sample_distinct(set.videos[chosen[1]].usable, half_b, rng);
    for (std::size_t k = 0; k < n; ++k) {
      batch.items.push_back(k % 2 == 0 ? BatchItem{chosen[0], frames_a[k / 2]} : BatchItem{chosen[1], frames_b[k / 2]});
    }
  }

  batch.targets.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (cfg.max_cycles > 0.0) batch.targets.excluded.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = set.videos[batch.items[i].video];
    for (std::size_t j = 0; j < n; ++j) {
      const auto& b = set.videos[batch.items[j].video];
      batch.targets.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          synchronization_level(a.phase.phases[batch.items[i].frame], b.phase.phases[batch.items[j].frame]);
      if (cfg.max_cycles > 0.0) {
        const double apart = std::abs(a.cycle[batch.items[i].frame] - b.cycle[batch.items[j].frame]);
        batch.targets.excluded[i * n + j] = apart > cfg.max_cycles ? 1 : 0;
      }
    }
  }

  std::uniform_real_distribution<double> scale(0.95, 1.05);
  std::bernoulli_distribution flip(0.5);
  for (const auto& item : batch.items) {
    const FrameSeries& video = set.videos[item.video].video;
    WindowSpec w{0, item.frame, {&video.frames[item.frame - 2], &video.frames[item.frame - 1], &video.frames[item.frame]}};
    Vector x = window_input(w);
    if (cfg.data_augmentation) {
      if (flip(rng)) x = train_detail::flip_horizontal(x, video.height(), video.width());
      x *= scale(rng);
    }
    batch.inputs.push_back(std::move(x));
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Forward / backward through the MLP.

/// Per-sample hidden-unit multipliers (0 or 1 / (1 - rate)); empty = no dropout.
using DropoutMasks = std::vector<Vector>;

template <typename Rng>
DropoutMasks draw_dropout(std::size_t batch, std::size_t hidden, double rate, Rng& rng) {
  DropoutMasks masks;
  if (rate <= 0.0) return masks;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (std::size_t k = 0; k < batch; ++k) {
    Vector m(static_cast<Eigen::Index>(hidden));
    for (Eigen::Index h = 0; h < m.size(); ++h) m(h) = keep(rng) ? scale : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

struct LossAndGradient {
  double loss = 0.0;
  ToyMlp gradient;
};

/// Soft pair loss of the network's outputs on `inputs`, and its exact
/// gradient with respect to every parameter.
inline LossAndGradient loss_gradient(const ToyMlp& mlp, const std::vector<Vector>& inputs, const PairTargets& targets,
                                     const DropoutMasks& dropout = {}) {
  const std::size_t n = inputs.size();
  require(dropout.empty() || dropout.size() == n, Errc::dimension_mismatch, "one dropout mask per sample");
  std::vector<Vector> hidden(n), features(n);
  for (std::size_t k = 0; k < n; ++k) {
    require(static_cast<std::size_t>(inputs[k].size()) == mlp.input_size(), Errc::dimension_mismatch,
            "input " + std::to_string(k) + " has wrong size");
    hidden[k] = (mlp.w1 * inputs[k] + mlp.b1).array().tanh().matrix();
    Vector active = dropout.empty() ? hidden[k] : Vector(hidden[k].cwiseProduct(dropout[k]));
    features[k] = mlp.w2 * active + mlp.b2;
  }
  std::vector<Vector> dfeat;
  LossAndGradient out;
  out.loss = soft_pair_loss(features, targets, &dfeat);
  out.gradient = ToyMlp::zeros(mlp.input_size(), mlp.hidden_size(), mlp.output_size());
  ToyMlp& g = out.gradient;
  for (std::size_t k = 0; k < n; ++k) {
    Vector active = dropout.empty() ? hidden[k] : Vector(hidden[k].cwiseProduct(dropout[k]));
    g.w2.noalias() += dfeat[k] * active.transpose();
    g.b2 += dfeat[k];
    Vector dh = mlp.w2.transpose() * dfeat[k];
    if (!dropout.empty()) dh = dh.cwiseProduct(dropout[k]);
    Vector dz = dh.cwiseProduct((1.0 - hidden[k].array().square()).matrix());
    g.w1.noalias() += dz * inputs[k].transpose();
    g.b1 += dz;
  }
  return out;
}

inline double batch_loss(const ToyMlp& mlp, const std::vector<Vector>& inputs, const PairTargets& targets) {
  std::vector<Vector> features;
  features.reserve(inputs.size());
  for (const auto& x : inputs) features.push_back(mlp.forward(x));
  return soft_pair_loss(features, targets);
}

// ---------------------------------------------------------------------------
// Training loop.

struct TrainResult {
  ToyMlp model;
  /// Loss of every mini-batch, in order.
  std::vector<double> loss_history;
  std::size_t batches_per_epoch = 0;

  /// Mean mini-batch loss over the last epoch.
  double final_loss() const {
    if (loss_history.empty()) return 0.0;
    const std::size_t k = std::min(batches_per_epoch, loss_history.size());
    double s = 0.0;
    for (std::size_t i = loss_history.size() - k; i < loss_history.size(); ++i) s += loss_history[i];
    return s / static_cast<double>(k);
  }
};

/// SGD with momentum on the soft pair loss. All randomness comes from one
/// generator seeded with cfg.seed, so runs are reproducible.
inline TrainResult train(const TrainingSet& set, const TrainConfig& cfg) {
  validate(cfg);
  require(!set.videos.empty(), Errc::insufficient_frames, "training set is empty");
  const auto h = set.frame_height();
  const auto w = set.frame_width();
  for (const auto& v : set.videos) {
    require(v.video.height() == h && v.video.width() == w, Errc::dimension_mismatch,
            "training videos must share frame dimensions");
  }

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.model = ToyMlp::initialize(static_cast<std::size_t>(3 * h * w), cfg.hidden, cfg.fc, rng);
  result.batches_per_epoch = cfg.batches_per_epoch ? cfg.batches_per_epoch : set.videos.size();

  ToyMlp velocity = ToyMlp::zeros(result.model.input_size(), cfg.hidden, cfg.fc);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t b = 0; b < result.batches_per_epoch; ++b, ++step) {
      const Batch batch = sample_batch(set, cfg, rng);
      const DropoutMasks dropout = draw_dropout(batch.inputs.size(), cfg.hidden, cfg.dropout_rate, rng);
      LossAndGradient lg;
      try {
        lg = loss_gradient(result.model, batch.inputs, batch.targets, dropout);
      } catch (const Error& e) {
        if (e.code() != Errc::non_finite) throw;
        fail(Errc::divergence, "features became non-finite at step " + std::to_string(step));
      }
      require(std::isfinite(lg.loss), Errc::divergence, "loss became non-finite at step " + std::to_string(step));
      result.loss_history.push_back(lg.loss);

      velocity.w1 = cfg.momentum * velocity.w1 - cfg.learning_rate * lg.gradient.w1;
      velocity.b1 = cfg.momentum * velocity.b1 - cfg.learning_rate * lg.gradient.b1;
      velocity.w2 = cfg.momentum * velocity.w2 - cfg.learning_rate * lg.gradient.w2;
      velocity.b2 = cfg.momentum * velocity.b2 - cfg.learning_rate * lg.gradient.b2;
      result.model.w1 += velocity.w1;
      result.model.b1 += velocity.b1;
      result.model.w2 += velocity.w2;
      result.model.b2 += velocity.b2;
      require(result.model.all_finite(), Errc::divergence,
              "parameters became non-finite at step " + std::to_string(step));
    }
  }
  return result;
}

}  // namespace cyclosync
