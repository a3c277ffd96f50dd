// Copyright 2026 The HistoStyle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace histostyle {

/// Caller passed something the operation cannot accept (shape mismatch,
/// unknown tap, out-of-range size, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file parsed but does not follow its documented format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weight file is well formed but does not match the expected architecture.
class IncompatibleWeights : public std::runtime_error {
 public:
  IncompatibleWeights(std::string layer, const std::string& what)
      : std::runtime_error("incompatible weights for layer '" + layer +
                           "': " + what),
        layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Score data failed validation. `row` is 1-based counting the header, 0 when
/// the error is not tied to a CSV row.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, std::size_t row, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)), row_(row) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t row() const noexcept { return row_; }

 private:
  std::string field_;
  std::size_t row_;
};

class DuplicateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative special-function evaluation did not converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A test statistic is undefined (e.g. zero variance with nonzero mean).
class DegenerateSignal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace histostyle
