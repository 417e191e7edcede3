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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/types.hpp"

namespace cyclosync {

enum class MatrixKind { similarity, cost, ground_truth };

constexpr std::string_view to_string(MatrixKind kind) noexcept {
  switch (kind) {
    case MatrixKind::similarity: return "similarity";
    case MatrixKind::cost: return "cost";
    case MatrixKind::ground_truth: return "ground_truth";
  }
  return "unknown";
}

inline MatrixKind parse_matrix_kind(std::string_view s) {
  if (s == "similarity") return MatrixKind::similarity;
  if (s == "cost") return MatrixKind::cost;
  if (s == "ground_truth") return MatrixKind::ground_truth;
  fail(Errc::malformed_header, "unknown matrix kind '" + std::string(s) + "'");
}

/// Dense H x W grid over (frame of A, frame of B). Row r maps to frame
/// `row_offset + r` of the rows video; likewise for columns.
struct SyncMatrix {
  Matrix values;
  MatrixKind kind = MatrixKind::similarity;
  /// Empty, or one flag per cell (row-major); nonzero marks an unusable cell.
  std::vector<std::uint8_t> mask;
  std::string rows_video;
  std::string cols_video;
  std::size_t row_offset = 0;
  std::size_t col_offset = 0;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  bool masked(std::size_t i, std::size_t j) const noexcept { return !mask.empty() && mask[i * cols() + j] != 0; }
  bool has_mask() const noexcept { return !mask.empty(); }
};

inline void validate(const SyncMatrix& m) {
  require(m.rows() > 0 && m.cols() > 0, Errc::empty_matrix, "matrix is empty");
  require(m.mask.empty() || m.mask.size() == m.rows() * m.cols(), Errc::dimension_mismatch,
          "mask size does not match matrix");
  const double lo = m.kind == MatrixKind::similarity ? -1.0 : 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m.masked(i, j)) continue;
      const double v = m(i, j);
      require(std::isfinite(v), Errc::non_finite, "matrix cell is not finite");
      require(v >= lo && v <= 1.0, Errc::invalid_argument,
              std::string(to_string(m.kind)) + " matrix value out of range at (" + std::to_string(i) + ", " +
                  std::to_string(j) + ")");
    }
  }
}

inline SyncMatrix transpose(const SyncMatrix& m) {
  SyncMatrix t;
  t.values = m.values.transpose();
  t.kind = m.kind;
  t.rows_video = m.cols_video;
  t.cols_video = m.rows_video;
  t.row_offset = m.col_offset;
  t.col_offset = m.row_offset;
  if (m.has_mask()) {
    t.mask.resize(m.mask.size());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) t.mask[j * m.rows() + i] = m.mask[i * m.cols() + j];
  }
  return t;
}

/// CSMAT v1: header `CSMAT v1 <H> <W> <kind>`, then H rows of W floats.
/// Masked cells are written as `nan`.
inline void store_sync_matrix(const SyncMatrix& m, const fs::path& path) {
  auto out = detail::open_out(path);
  out << "CSMAT v1 " << m.rows() << ' ' << m.cols() << ' ' << to_string(m.kind) << '\n';
  std::vector<double> row(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) row[j] = m.masked(i, j) ? std::nan("") : m(i, j);
    detail::write_float_row(out, row.data(), row.size());
  }
  require(out.good(), Errc::io, "write failed for " + path.string());
}

inline SyncMatrix read_sync_matrix(std::istream& in, const std::string& what = "CSMAT") {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::malformed_header, what + ": empty file");
  const auto header = detail::split_ws(line);
  require(header.size() == 5 && header[0] == "CSMAT" && header[1] == "v1", Errc::malformed_header,
          what + ": expected 'CSMAT v1 <H> <W> <kind>'");
  const auto h = detail::parse_size(header[2]);
  const auto w = detail::parse_size(header[3]);
  require(h && w && *h > 0 && *w > 0, Errc::malformed_header, what + ": bad matrix shape");
  SyncMatrix m;
  m.kind = parse_matrix_kind(header[4]);
  const auto values = detail::read_float_rows(in, *h, *w, what, m.kind == MatrixKind::ground_truth);
  m.values.resize(static_cast<Eigen::Index>(*h), static_cast<Eigen::Index>(*w));
  bool any_masked = false;
  for (std::size_t k = 0; k < values.size(); ++k) any_masked = any_masked || std::isnan(values[k]);
  if (any_masked) m.mask.assign(values.size(), 0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool masked = std::isnan(values[k]);
    if (masked) m.mask[k] = 1;
    m.values.data()[k] = masked ? 0.0 : values[k];
  }
  validate(m);
  return m;
}

inline SyncMatrix load_sync_matrix(const fs::path& path) {
  auto in = detail::open_in(path);
  return read_sync_matrix(in, path.string());
}

/// 8-bit grayscale view; similarity is mapped from [-1, 1] to [0, 255].
inline Matrix display_image(const SyncMatrix& m) {
  Matrix img(m.values.rows(), m.values.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      if (m.kind == MatrixKind::similarity) v = 0.5 * (v + 1.0);
      img(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.masked(i, j) ? 0.0 : v;
    }
  }
  return img;
}

inline void store_sync_matrix_pgm(const SyncMatrix& m, const fs::path& path) {
  store_pgm(display_image(m), path, 255);
}

}  // namespace cyclosync
