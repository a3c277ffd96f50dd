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

#include "histostyle/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "histostyle/errors.hpp"

namespace histostyle::lbfgs {
namespace {

constexpr double kMinStep = 1e-20;
constexpr double kMaxStep = 1e20;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

Vector projected_gradient(std::span<const double> x,
                          std::span<const double> g,
                          const std::optional<Bounds>& bounds) {
  Vector pg(g.begin(), g.end());
  if (!bounds) return pg;
  for (std::size_t i = 0; i < pg.size(); ++i) {
    if (x[i] <= bounds->lower[i] && pg[i] > 0) pg[i] = 0;
    if (x[i] >= bounds->upper[i] && pg[i] < 0) pg[i] = 0;
  }
  return pg;
}

// Zeroes direction components that would leave the box from an active face.
void freeze_active(std::span<const double> x, std::span<double> d,
                   const std::optional<Bounds>& bounds) {
  if (!bounds) return;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (x[i] <= bounds->lower[i] && d[i] < 0) d[i] = 0;
    if (x[i] >= bounds->upper[i] && d[i] > 0) d[i] = 0;
  }
}

struct Trial {
  double t = 0;
  double f = 0;
  double slope = 0;  // directional derivative g(t)^T d
  Vector x;
  Vector g;
};

// Minimizer of the cubic matching values and slopes at both ends, clamped
// away from the ends; bisection when the cubic is unusable.
double interpolate(const Trial& lo, const Trial& hi) {
  const double a = std::min(lo.t, hi.t), b = std::max(lo.t, hi.t);
  const double margin = 0.1 * (b - a);
  const double mid = 0.5 * (a + b);
  if (!std::isfinite(lo.f) || !std::isfinite(hi.f) ||
      !std::isfinite(lo.slope) || !std::isfinite(hi.slope)) {
    return mid;
  }
  const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.t - hi.t);
  const double disc = d1 * d1 - lo.slope * hi.slope;
  if (disc < 0) return mid;
  const double d2 = std::copysign(std::sqrt(disc), hi.t - lo.t);
  const double denom = hi.slope - lo.slope + 2.0 * d2;
  if (denom == 0) return mid;
  const double t = hi.t - (hi.t - lo.t) * (hi.slope + d2 - d1) / denom;
  if (!std::isfinite(t) || t < a + margin || t > b - margin) return mid;
  return t;
}

}  // namespace

void Config::validate(std::size_t dimension) const {
  if (!(c1 > 0 && c1 < c2 && c2 < 1)) {
    throw InvalidInput("line search constants must satisfy 0 < c1 < c2 < 1");
  }
  if (history_size < 1) throw InvalidInput("history size must be >= 1");
  if (line_search_budget < 1) throw InvalidInput("line search budget must be >= 1");
  if (bounds) {
    if (bounds->lower.size() != dimension || bounds->upper.size() != dimension) {
      throw InvalidInput("bounds dimension does not match x0");
    }
    for (std::size_t i = 0; i < dimension; ++i) {
      if (!(bounds->lower[i] <= bounds->upper[i])) {
        throw InvalidInput("lower bound exceeds upper bound at " +
                           std::to_string(i));
      }
    }
  }
}

void project(std::span<double> x, const Bounds& bounds) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], bounds.lower[i], bounds.upper[i]);
  }
}

bool push_pair(State& state, Vector s, Vector y, std::size_t capacity) {
  const double sy = dot(s, y);
  if (!(sy > kCurvatureFloor)) return false;
  state.history.push_back({std::move(s), std::move(y), 1.0 / sy});
  while (state.history.size() > capacity) state.history.pop_front();
  return true;
}

Vector two_loop_direction(State& state) {
  const Vector& g = state.gradient;
  Vector steepest(g.size());
  std::transform(g.begin(), g.end(), steepest.begin(),
                 [](double v) { return -v; });
  if (state.history.empty()) return steepest;

  Vector q = g;
  std::vector<double> alpha(state.history.size());
  for (std::size_t i = state.history.size(); i-- > 0;) {
    const auto& p = state.history[i];
    alpha[i] = p.rho * dot(p.s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * p.y[k];
  }
  const auto& newest = state.history.back();
  const double gamma = dot(newest.s, newest.y) / dot(newest.y, newest.y);
  for (double& v : q) v *= gamma;
  for (std::size_t i = 0; i < state.history.size(); ++i) {
    const auto& p = state.history[i];
    const double beta = p.rho * dot(p.y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += p.s[k] * (alpha[i] - beta);
  }
  for (double& v : q) v = -v;

  const double slope = dot(q, g);
  const bool nonzero_gradient =
      std::any_of(g.begin(), g.end(), [](double v) { return v != 0; });
  if (nonzero_gradient && !(slope < 0 && finite(q))) {
    state.history.clear();
    return steepest;
  }
  return q;
}

LineSearchResult wolfe_line_search(const Objective& objective,
                                   std::span<const double> x, double value,
                                   std::span<const double> gradient,
                                   std::span<const double> direction,
                                   double initial_step, const Config& config) {
  LineSearchResult result;
  const double phi0 = value;
  const double slope0 = dot(gradient, direction);
  if (!(slope0 < 0)) return result;

  const std::size_t n = x.size();
  auto evaluate = [&](double t) {
    Trial trial;
    trial.t = t;
    trial.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) trial.x[i] = x[i] + t * direction[i];
    if (config.bounds) project(trial.x, *config.bounds);
    trial.g.assign(n, 0.0);
    trial.f = objective(trial.x, trial.g);
    ++result.evaluations;
    if (!std::isfinite(trial.f) || !finite(trial.g)) {
      trial.f = std::numeric_limits<double>::infinity();
      trial.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
      trial.slope = dot(trial.g, direction);
    }
    return trial;
  };
  auto armijo = [&](const Trial& t) {
    return t.f < phi0 && t.f <= phi0 + config.c1 * t.t * slope0;
  };
  auto curvature = [&](const Trial& t) {
    return std::abs(t.slope) <= -config.c2 * slope0;
  };
  auto accept = [&](Trial&& t, LineSearchStatus status) {
    result.status = status;
    result.step = t.t;
    result.value = t.f;
    result.x = std::move(t.x);
    result.gradient = std::move(t.g);
    return result;
  };

  Trial lo{0.0, phi0, slope0, {}, {}};
  Trial hi;
  bool bracketed = false;
  double smallest_tried = std::max(initial_step, kMinStep);

  // Expansion: grow the step until the minimizer is bracketed.
  Trial prev = lo;
  double t = std::clamp(initial_step, kMinStep, kMaxStep);
  for (std::size_t i = 0; result.evaluations < config.line_search_budget; ++i) {
    Trial cur = evaluate(t);
    smallest_tried = std::min(smallest_tried, t);
    if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) {
      lo = std::move(prev);
      hi = std::move(cur);
      bracketed = true;
      break;
    }
    if (curvature(cur)) return accept(std::move(cur), LineSearchStatus::kWolfe);
    if (cur.slope >= 0) {
      hi = std::move(prev);
      lo = std::move(cur);
      bracketed = true;
      break;
    }
    prev = std::move(cur);
    lo = prev;
    t = std::min(2.0 * t, kMaxStep);
  }

  // Zoom: shrink [lo, hi] keeping lo the best sufficient-decrease point.
  while (bracketed && result.evaluations < config.line_search_budget) {
    const double tt = interpolate(lo, hi);
    Trial cur = evaluate(tt);
    smallest_tried = std::min(smallest_tried, tt);
    if (!armijo(cur) || cur.f >= lo.f) {
      hi = std::move(cur);
      continue;
    }
    if (curvature(cur)) return accept(std::move(cur), LineSearchStatus::kWolfe);
    if (cur.slope * (hi.t - lo.t) >= 0) hi = lo;
    lo = std::move(cur);
  }

  if (lo.t > 0) return accept(std::move(lo), LineSearchStatus::kArmijo);

  // Nothing acceptable inside the budget: plain backtracking.
  for (double tb = 0.1 * smallest_tried; tb >= kMinStep; tb *= 0.1) {
    Trial cur = evaluate(tb);
    if (armijo(cur)) return accept(std::move(cur), LineSearchStatus::kArmijo);
  }
  result.status = LineSearchStatus::kFailed;
  return result;
}

Result minimize(const Objective& objective, Vector x0, const Config& config,
                const IterationCallback& on_iteration) {
  const std::size_t n = x0.size();
  config.validate(n);
  if (config.bounds) project(x0, *config.bounds);

  Vector g(n, 0.0);
  const double f0 = objective(x0, g);
  if (!std::isfinite(f0) || !finite(g)) {
    throw InvalidInput("objective is not finite at the starting point");
  }

  State state;
  state.x = std::move(x0);
  state.value = f0;
  state.best_x = state.x;
  state.best_value = f0;
  Vector raw_gradient = std::move(g);

  Result result;
  result.trace.push_back(f0);
  result.evaluations = 1;

  while (state.iteration < config.max_iterations) {
    state.gradient = projected_gradient(state.x, raw_gradient, config.bounds);
    const double gnorm = norm(state.gradient);
    if (gnorm == 0.0 ||
        gnorm <= config.gradient_tolerance * std::max(1.0, std::abs(state.value))) {
      result.termination = Termination::kGradientTolerance;
      break;
    }

    LineSearchResult step;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Vector d = two_loop_direction(state);
      freeze_active(state.x, d, config.bounds);
      if (!(dot(d, state.gradient) < 0)) {
        state.history.clear();
        d = two_loop_direction(state);
      }
      const double t0 = state.history.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
      step = wolfe_line_search(objective, state.x, state.value, state.gradient,
                               d, t0, config);
      result.evaluations += step.evaluations;
      if (step.status != LineSearchStatus::kFailed || state.history.empty()) {
        break;
      }
      state.history.clear();
    }
    if (step.status == LineSearchStatus::kFailed) {
      result.termination = Termination::kLineSearchFailure;
      result.warning = true;
      break;
    }

    Vector s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = step.x[i] - state.x[i];
      y[i] = step.gradient[i] - raw_gradient[i];
    }
    push_pair(state, std::move(s), std::move(y), config.history_size);

    state.x = std::move(step.x);
    raw_gradient = std::move(step.gradient);
    state.value = step.value;
    ++state.iteration;
    if (state.value < state.best_value) {
      state.best_value = state.value;
      state.best_x = state.x;
    }
    result.trace.push_back(state.value);
    if (on_iteration) on_iteration(state.iteration, state.value);
  }

  result.x = std::move(state.best_x);
  result.value = state.best_value;
  result.iterations = state.iteration;
  return result;
}

}  // namespace histostyle::lbfgs
