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

#include <random>

#include <gtest/gtest.h>

#include "cyclosync/pathfinding.hpp"
#include "oracles.hpp"

using namespace cyclosync;

namespace {

Matrix random_cost(std::mt19937_64& rng, Eigen::Index h, Eigen::Index w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(h, w);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

// Independent structural check, written against the path rules rather than
// shared with the library.
::testing::AssertionResult structurally_valid(const SyncPath& p, std::size_t h, std::size_t w, bool boundary) {
  if (p.points.empty()) return ::testing::AssertionFailure() << "empty path";
  int run_i = 0, run_j = 0;
  for (std::size_t k = 0; k < p.points.size(); ++k) {
    if (p.points[k].i >= h || p.points[k].j >= w) return ::testing::AssertionFailure() << "point " << k << " outside";
    if (k == 0) continue;
    const long di = static_cast<long>(p.points[k].i) - static_cast<long>(p.points[k - 1].i);
    const long dj = static_cast<long>(p.points[k].j) - static_cast<long>(p.points[k - 1].j);
    if (!((di == 1 && dj == 1) || (di == 1 && dj == 0) || (di == 0 && dj == 1)))
      return ::testing::AssertionFailure() << "bad step at " << k;
    run_i = (di == 1 && dj == 0) ? run_i + 1 : 0;
    run_j = (di == 0 && dj == 1) ? run_j + 1 : 0;
    if (run_i > 3 || run_j > 3) return ::testing::AssertionFailure() << "run longer than 3 at " << k;
  }
  if (boundary) {
    const auto& f = p.points.front();
    const auto& l = p.points.back();
    if (f.i != 0 && f.j != 0) return ::testing::AssertionFailure() << "does not start on first row/column";
    if (l.i != h - 1 && l.j != w - 1) return ::testing::AssertionFailure() << "does not end on last row/column";
  }
  return ::testing::AssertionSuccess();
}

}  // namespace

TEST(Dijkstra, UniformZeroCostTakesDiagonal) {
  const auto path = constrained_dijkstra(Matrix::Zero(10, 10), {0, 0}, SearchDirection::forward);
  ASSERT_EQ(path.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(path.points[k], (GridPoint{k, k}));
  EXPECT_EQ(path.total_cost, 0.0);
}

TEST(Dijkstra, MatchesExhaustiveDpOnRandomMatrices) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix cost = random_cost(rng, 8, 8);
    for (GridPoint s : {GridPoint{0, 0}, GridPoint{0, 3}, GridPoint{5, 0}}) {
      const auto path = constrained_dijkstra(cost, s, SearchDirection::forward);
      ASSERT_EQ(path.total_cost, oracle::constrained_dp_forward(cost, s.i, s.j)) << "trial " << trial;
      EXPECT_EQ(path.total_cost, path_cost(cost, path.points));
      EXPECT_EQ(path.points.front(), s);
    }
    const GridPoint e{7, 4};
    const auto back = constrained_dijkstra(cost, e, SearchDirection::backward);
    ASSERT_EQ(back.total_cost, oracle::constrained_dp_backward(cost, e.i, e.j)) << "trial " << trial;
    EXPECT_EQ(back.points.back(), e);
  }
}

TEST(Dijkstra, DpOracleAgreesWithEnumeration) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix cost = random_cost(rng, 6, 5 + trial % 3);
    EXPECT_DOUBLE_EQ(oracle::constrained_dp_forward(cost, 0, 1), oracle::brute_force_forward(cost, 0, 1));
  }
}

TEST(Dijkstra, FollowsSlopeTwoCorridor) {
  Matrix cost = Matrix::Ones(8, 16);
  for (Eigen::Index i = 0; i < 8; ++i) cost(i, 2 * i) = cost(i, 2 * i + 1) = 0.0;
  const auto path = constrained_dijkstra(cost, {0, 0}, SearchDirection::forward);
  EXPECT_EQ(path.total_cost, 0.0);
  ASSERT_EQ(path.size(), 15u);
  for (std::size_t k = 0; k < path.size(); ++k) {
    EXPECT_EQ(path.points[k], (GridPoint{k / 2, k}));
  }
  EXPECT_TRUE(structurally_valid(path, 8, 16, true));
}

TEST(Dijkstra, RejectsBadInputs) {
  EXPECT_THROW(constrained_dijkstra(Matrix(0, 0), {0, 0}, SearchDirection::forward), Error);
  EXPECT_THROW(constrained_dijkstra(Matrix::Zero(4, 4), {4, 0}, SearchDirection::forward), Error);
  SyncMatrix sim;
  sim.values = Matrix::Zero(3, 3);
  EXPECT_THROW(constrained_dijkstra(sim, {0, 0}, SearchDirection::forward), Error);
}

TEST(Dijkstra, BackwardFromForwardEndIsNoWorse) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix cost = random_cost(rng, 9 + trial % 4, 7 + trial % 5);
    const auto fwd = constrained_dijkstra(cost, {0, static_cast<std::size_t>(trial % 5)}, SearchDirection::forward);
    const auto bwd = constrained_dijkstra(cost, fwd.points.back(), SearchDirection::backward);
    EXPECT_LE(bwd.total_cost, fwd.total_cost);
  }
}

TEST(BestPath, IdentityStripeGivesMainDiagonal) {
  Matrix cost = Matrix::Ones(12, 12);
  cost.diagonal().setZero();
  const auto path = find_best_path(cost);
  ASSERT_EQ(path.size(), 12u);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(path.points[k], (GridPoint{k, k}));
  EXPECT_EQ(path.straightness, 0.0);
}

TEST(BestPath, WideMatrixStillHasCandidate) {
  // The length threshold scales with the short side, which the corner start
  // always spans.
  PathSearchConfig cfg;
  cfg.min_length_fraction = 0.9;
  const auto path = find_best_path(Matrix::Zero(2, 50), cfg);
  EXPECT_TRUE(is_admissible(path, 2, 50));
  EXPECT_GE(path.size(), 2u);
}

TEST(BestPath, ShortCandidatesAreRejected) {
  SyncPath a, b;
  a.points = {{0, 40}, {1, 41}};
  b.points = {{0, 45}, {0, 46}, {1, 47}};
  try {
    select_best_path({a, b}, 10, 50, 0.9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_candidate);
  }
}

TEST(BestPath, RandomSearchesAreStructurallyValid) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_int_distribution<std::size_t> stride(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix cost = random_cost(rng, size(rng), size(rng));
    PathSearchConfig cfg;
    cfg.start_stride = stride(rng);
    cfg.min_length_fraction = 0.5;
    const auto path = find_best_path(cost, cfg);
    ASSERT_TRUE(structurally_valid(path, static_cast<std::size_t>(cost.rows()), static_cast<std::size_t>(cost.cols()), true))
        << "trial " << trial;
    EXPECT_TRUE(is_admissible(path, static_cast<std::size_t>(cost.rows()), static_cast<std::size_t>(cost.cols())));
    EXPECT_GE(static_cast<double>(path.size()), 0.5 * static_cast<double>(std::min(cost.rows(), cost.cols())));
  }
}

TEST(BestPath, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(8);
  const Matrix cost = random_cost(rng, 40, 33);
  PathSearchConfig cfg;
  cfg.start_stride = 2;
  cfg.min_length_fraction = 0.6;
  cfg.threads = 1;
  const auto ref = find_best_path(cost, cfg);
  for (std::size_t t : {1u, 2u, 5u}) {
    cfg.threads = t;
    EXPECT_EQ(find_best_path(cost, cfg), ref);
  }
}

TEST(BestPath, SelectionPrefersLongThenStraight) {
  SyncPath short_straight{{{0, 0}, {1, 1}, {2, 2}}, 0.0, 0.0, false};
  SyncPath long_bent{{{0, 0}, {0, 1}, {1, 2}, {2, 2}}, 0.0, path_straightness({{0, 0}, {0, 1}, {1, 2}, {2, 2}}), false};
  SyncPath long_straight{{{0, 0}, {0, 1}, {0, 2}, {0, 3}}, 0.0, 0.0, false};
  EXPECT_EQ(select_best_path({short_straight, long_bent}, 3, 3, 0.9), long_bent);
  EXPECT_EQ(select_best_path({long_bent, long_straight, short_straight}, 3, 4, 0.9), long_straight);
  EXPECT_THROW(select_best_path({short_straight}, 10, 10, 0.9), Error);
}

TEST(Straightness, ZeroForCollinearPoints) {
  EXPECT_EQ(path_straightness({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), 0.0);
  EXPECT_NEAR(path_straightness({{0, 0}, {0, 1}, {1, 1}, {1, 2}}), path_straightness({{0, 0}, {1, 0}, {1, 1}, {2, 1}}), 1e-15);
  EXPECT_GT(path_straightness({{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}}), 0.1);
}

TEST(PathJson, RoundTrip) {
  SyncPath p{{{0, 3}, {1, 4}, {2, 4}}, 1.25, 0.3, false};
  EXPECT_EQ(path_from_json(to_json(p)), p);
  p.trimmed = true;
  EXPECT_EQ(path_from_json(to_json(p)), p);
  EXPECT_THROW(path_from_json(nlohmann::json{{"points", {{1, -2}}}}), Error);
}
