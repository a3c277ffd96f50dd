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

namespace histostyle::stats {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly (no cancellation in the tail).
double gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_i(double a, double b, double x);

/// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);
/// One-tailed P(T > t) for T ~ Student-t(df).
double t_sf(double t, double df);

}  // namespace histostyle::stats
