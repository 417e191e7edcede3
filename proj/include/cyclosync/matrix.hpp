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
#include <string>

#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/parallel.hpp"
#include "cyclosync/sync_matrix.hpp"

namespace cyclosync {

/// (a . b) / (|a| |b|), clamped to [-1, 1]. Identical and opposite vectors
/// give exactly 1 and -1.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  require(a.size() == b.size(), Errc::dimension_mismatch, "cosine similarity of vectors with different sizes");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, Errc::zero_norm, "cosine similarity of a zero-norm vector");
  if (a == b) return 1.0;
  if (a == -b) return -1.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Cosine similarity between every vector of `fa` (rows) and `fb` (columns).
inline SyncMatrix similarity_matrix(const FeatureSeries& fa, const FeatureSeries& fb, std::size_t threads = 0) {
  require(fa.size() > 0 && fb.size() > 0, Errc::empty_matrix, "feature series must be non-empty");
  require(fa.dim == fb.dim, Errc::dimension_mismatch,
          "feature dimensions differ: " + std::to_string(fa.dim) + " vs " + std::to_string(fb.dim));
  auto check = [](const FeatureSeries& f, const char* name) {
    for (std::size_t k = 0; k < f.size(); ++k) {
      require(static_cast<std::size_t>(f.vectors[k].size()) == f.dim, Errc::dimension_mismatch,
              std::string(name) + " vector " + std::to_string(k) + " has wrong dimension");
      require(f.vectors[k].allFinite(), Errc::non_finite, std::string(name) + " vector " + std::to_string(k) + " is not finite");
      require(f.vectors[k].norm() > 0.0, Errc::zero_norm,
              std::string(name) + " vector " + std::to_string(k) + " has zero norm");
    }
  };
  check(fa, "series A");
  check(fb, "series B");

  SyncMatrix m;
  m.kind = MatrixKind::similarity;
  m.row_offset = fa.first_frame;
  m.col_offset = fb.first_frame;
  m.values.resize(static_cast<Eigen::Index>(fa.size()), static_cast<Eigen::Index>(fb.size()));
  parallel_for(fa.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < fb.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cosine_similarity(fa.vectors[i], fb.vectors[j]);
    }
  });
  return m;
}

/// Cost for path search. Similarity s maps to 1 - 0.5 (s + 1); ground truth
/// y maps to 1 - y. Masked cells get the neutral cost 0.5.
inline SyncMatrix to_cost(const SyncMatrix& m) {
  require(m.kind != MatrixKind::cost, Errc::wrong_kind, "matrix is already a cost matrix");
  SyncMatrix c = m;
  c.kind = MatrixKind::cost;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      double out = m.kind == MatrixKind::similarity ? 1.0 - 0.5 * (v + 1.0) : 1.0 - v;
      if (m.masked(i, j)) out = 0.5;
      c.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out;
    }
  }
  return c;
}

}  // namespace cyclosync
