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

// Limited-memory BFGS with a strong-Wolfe line search and box constraints
// handled by gradient projection.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace histostyle::lbfgs {

using Vector = std::vector<double>;

/// Writes the gradient into `grad` (already sized) and returns the value.
using Objective = std::function<double(std::span<const double> x,
                                       std::span<double> grad)>;

/// Called once per accepted iteration with (iteration, value).
using IterationCallback = std::function<void(std::size_t, double)>;

struct Bounds {
  Vector lower;
  Vector upper;
};

struct Config {
  std::size_t history_size = 10;
  std::size_t max_iterations = 100;
  double c1 = 1e-4;
  double c2 = 0.9;
  /// Stop when ||projected gradient|| <= tolerance * max(1, |f|). An exactly
  /// zero projected gradient always stops.
  double gradient_tolerance = 1e-8;
  /// Function evaluations allowed per line search before falling back.
  std::size_t line_search_budget = 20;
  std::optional<Bounds> bounds;

  void validate(std::size_t dimension) const;
};

/// A stored curvature pair with rho = 1 / (s^T y).
struct CurvaturePair {
  Vector s;
  Vector y;
  double rho = 0.0;
};

struct State {
  Vector x;
  Vector gradient;
  double value = 0.0;
  std::deque<CurvaturePair> history;  // oldest first
  std::size_t iteration = 0;
  Vector best_x;
  double best_value = 0.0;
};

/// Minimum s^T y for a pair to be stored.
inline constexpr double kCurvatureFloor = 1e-10;

/// Pushes (s, y) if s^T y exceeds the curvature floor, evicting the oldest
/// pair beyond `capacity`. Returns whether the pair was stored.
bool push_pair(State& state, Vector s, Vector y, std::size_t capacity);

/// Two-loop recursion applied to `state.gradient`. Returns a descent
/// direction; if the recursion does not produce one, the history is cleared
/// and steepest descent is returned.
Vector two_loop_direction(State& state);

enum class LineSearchStatus {
  kWolfe,      // both strong-Wolfe conditions hold
  kArmijo,     // budget exhausted, best sufficient-decrease step returned
  kFailed,     // no sufficient-decrease step down to 1e-20
};

struct LineSearchResult {
  LineSearchStatus status = LineSearchStatus::kFailed;
  double step = 0.0;
  double value = 0.0;
  Vector x;
  Vector gradient;
  std::size_t evaluations = 0;
};

/// Searches along `direction` from `x` (value and gradient given). Trial
/// points are projected into the bounds before evaluation.
LineSearchResult wolfe_line_search(const Objective& objective,
                                   std::span<const double> x, double value,
                                   std::span<const double> gradient,
                                   std::span<const double> direction,
                                   double initial_step, const Config& config);

enum class Termination {
  kIterationLimit,
  kGradientTolerance,
  kLineSearchFailure,
};

struct Result {
  Vector x;
  double value = 0.0;
  /// Objective value at x0 followed by one entry per accepted iteration.
  std::vector<double> trace;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  Termination termination = Termination::kIterationLimit;
  /// Set when the run ended on a line-search failure after a history reset.
  bool warning = false;
};

/// Minimizes `objective` from `x0`. Throws InvalidInput when the objective is
/// non-finite at the projected starting point.
Result minimize(const Objective& objective, Vector x0, const Config& config,
                const IterationCallback& on_iteration = {});

/// Clamps `x` into the box.
void project(std::span<double> x, const Bounds& bounds);

}  // namespace histostyle::lbfgs
