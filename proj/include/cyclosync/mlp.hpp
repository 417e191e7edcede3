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
#include <random>
#include <string>
#include <vector>

#include "cyclosync/error.hpp"
#include "cyclosync/ingest.hpp"
#include "cyclosync/types.hpp"

namespace cyclosync {

/// Two-layer perceptron: input (3 stacked frames, flattened) -> tanh hidden
/// layer -> linear feature layer of size FC.
struct ToyMlp {
  Eigen::MatrixXd w1;  // hidden x input
  Vector b1;
  Eigen::MatrixXd w2;  // fc x hidden
  Vector b2;

  std::size_t input_size() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_size() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t output_size() const noexcept { return static_cast<std::size_t>(w2.rows()); }
  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }

  static ToyMlp zeros(std::size_t input, std::size_t hidden, std::size_t fc) {
    ToyMlp m;
    const auto in = static_cast<Eigen::Index>(input);
    const auto hi = static_cast<Eigen::Index>(hidden);
    const auto out = static_cast<Eigen::Index>(fc);
    m.w1 = Eigen::MatrixXd::Zero(hi, in);
    m.b1 = Vector::Zero(hi);
    m.w2 = Eigen::MatrixXd::Zero(out, hi);
    m.b2 = Vector::Zero(out);
    return m;
  }

  /// Glorot-uniform weights, zero hidden bias, output bias 0.01.
  template <typename Rng>
  static ToyMlp initialize(std::size_t input, std::size_t hidden, std::size_t fc, Rng& rng) {
    require(input > 0 && hidden > 0 && fc > 0, Errc::invalid_argument, "layer sizes must be positive");
    ToyMlp m = zeros(input, hidden, fc);
    auto fill = [&](Eigen::MatrixXd& w) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    };
    fill(m.w1);
    fill(m.w2);
    m.b2.setConstant(0.01);
    return m;
  }

  Vector forward(const Vector& x) const {
    require(static_cast<std::size_t>(x.size()) == input_size(), Errc::dimension_mismatch,
            "MLP input has " + std::to_string(x.size()) + " values, expected " + std::to_string(input_size()));
    Vector h = (w1 * x + b1).array().tanh().matrix();
    return w2 * h + b2;
  }

  /// Parameters flattened as w1, b1, w2, b2 (column-major within matrices).
  Vector flatten() const {
    Vector p(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    p.segment(k, w1.size()) = Eigen::Map<const Vector>(w1.data(), w1.size());
    k += w1.size();
    p.segment(k, b1.size()) = b1;
    k += b1.size();
    p.segment(k, w2.size()) = Eigen::Map<const Vector>(w2.data(), w2.size());
    k += w2.size();
    p.segment(k, b2.size()) = b2;
    return p;
  }

  void assign(const Vector& p) {
    require(static_cast<std::size_t>(p.size()) == parameter_count(), Errc::dimension_mismatch,
            "parameter vector has wrong size");
    Eigen::Index k = 0;
    Eigen::Map<Vector>(w1.data(), w1.size()) = p.segment(k, w1.size());
    k += w1.size();
    b1 = p.segment(k, b1.size());
    k += b1.size();
    Eigen::Map<Vector>(w2.data(), w2.size()) = p.segment(k, w2.size());
    k += w2.size();
    b2 = p.segment(k, b2.size());
  }

  bool all_finite() const { return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite(); }
};

/// CSMLP v1: header `CSMLP v1 <input> <hidden> <fc>`, then the rows of w1,
/// b1 on one line, the rows of w2, and b2 on one line, as 32-bit floats.
inline void store_mlp(const ToyMlp& m, const fs::path& path) {
  auto out = detail::open_out(path);
  out << "CSMLP v1 " << m.input_size() << ' ' << m.hidden_size() << ' ' << m.output_size() << '\n';
  auto write_matrix = [&](const Eigen::MatrixXd& w) {
    std::vector<double> row(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) row[static_cast<std::size_t>(c)] = w(r, c);
      detail::write_float_row(out, row.data(), row.size());
    }
  };
  write_matrix(m.w1);
  detail::write_float_row(out, m.b1.data(), static_cast<std::size_t>(m.b1.size()));
  write_matrix(m.w2);
  detail::write_float_row(out, m.b2.data(), static_cast<std::size_t>(m.b2.size()));
  require(out.good(), Errc::io, "write failed for " + path.string());
}

inline ToyMlp load_mlp(const fs::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::malformed_header, path.string() + ": empty file");
  const auto header = detail::split_ws(line);
  require(header.size() == 5 && header[0] == "CSMLP" && header[1] == "v1", Errc::malformed_header,
          path.string() + ": expected 'CSMLP v1 <input> <hidden> <fc>'");
  const auto input = detail::parse_size(header[2]);
  const auto hidden = detail::parse_size(header[3]);
  const auto fc = detail::parse_size(header[4]);
  require(input && hidden && fc && *input > 0 && *hidden > 0 && *fc > 0, Errc::malformed_header,
          path.string() + ": bad layer sizes");
  ToyMlp m = ToyMlp::zeros(*input, *hidden, *fc);
  auto read_rows = [&](std::size_t rows, std::size_t cols) {
    // Read exactly `rows` lines without consuming trailing content.
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
      require(static_cast<bool>(std::getline(in, line)), Errc::dimension_mismatch, path.string() + ": truncated");
      std::istringstream row_stream(line + "\n");
      auto row = detail::read_float_rows(row_stream, 1, cols, path.string());
      values.insert(values.end(), row.begin(), row.end());
    }
    return values;
  };
  auto w1 = read_rows(*hidden, *input);
  auto b1 = read_rows(1, *hidden);
  auto w2 = read_rows(*fc, *hidden);
  auto b2 = read_rows(1, *fc);
  while (std::getline(in, line)) {
    require(detail::split_ws(line).empty(), Errc::dimension_mismatch, path.string() + ": trailing data");
  }
  for (std::size_t r = 0; r < *hidden; ++r)
    for (std::size_t c = 0; c < *input; ++c)
      m.w1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w1[r * *input + c];
  for (std::size_t r = 0; r < *hidden; ++r) m.b1(static_cast<Eigen::Index>(r)) = b1[r];
  for (std::size_t r = 0; r < *fc; ++r)
    for (std::size_t c = 0; c < *hidden; ++c)
      m.w2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w2[r * *hidden + c];
  for (std::size_t r = 0; r < *fc; ++r) m.b2(static_cast<Eigen::Index>(r)) = b2[r];
  return m;
}

}  // namespace cyclosync
