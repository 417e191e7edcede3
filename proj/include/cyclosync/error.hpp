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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclosync {

enum class Errc {
  invalid_argument,
  io,
  malformed_header,
  dimension_mismatch,
  non_finite,
  missing_field,
  non_monotone,
  signal_flat,
  window_too_short,
  too_few_peaks,
  zero_norm,
  no_valid_pairs,
  wrong_kind,
  empty_matrix,
  out_of_bounds,
  all_masked,
  zero_denominator,
  path_too_short,
  no_candidate,
  insufficient_frames,
  divergence,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::io: return "io";
    case Errc::malformed_header: return "malformed-header";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::non_finite: return "non-finite";
    case Errc::missing_field: return "missing-field";
    case Errc::non_monotone: return "non-monotone";
    case Errc::signal_flat: return "signal-flat";
    case Errc::window_too_short: return "window-too-short";
    case Errc::too_few_peaks: return "too-few-peaks";
    case Errc::zero_norm: return "zero-norm";
    case Errc::no_valid_pairs: return "no-valid-pairs";
    case Errc::wrong_kind: return "wrong-kind";
    case Errc::empty_matrix: return "empty-matrix";
    case Errc::out_of_bounds: return "out-of-bounds";
    case Errc::all_masked: return "all-masked";
    case Errc::zero_denominator: return "zero-denominator";
    case Errc::path_too_short: return "path-too-short";
    case Errc::no_candidate: return "no-candidate";
    case Errc::insufficient_frames: return "insufficient-frames";
    case Errc::divergence: return "divergence";
  }
  return "unknown";
}

/// Numeric failures (degenerate signals, divergence) as opposed to bad input.
constexpr bool is_numeric(Errc code) noexcept {
  switch (code) {
    case Errc::signal_flat:
    case Errc::too_few_peaks:
    case Errc::zero_norm:
    case Errc::no_valid_pairs:
    case Errc::all_masked:
    case Errc::zero_denominator:
    case Errc::no_candidate:
    case Errc::divergence:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace cyclosync
