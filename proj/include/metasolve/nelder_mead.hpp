// Copyright 2026 The metasolve Authors
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

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace metasolve {

struct NelderMeadOptions {
  std::size_t max_evaluations = 200;
  double initial_step = 0.4;
  double tolerance = 1e-8;  // stop when the simplex value spread falls below
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Derivative-free simplex descent (standard coefficients 1, 2, 0.5, 0.5).
/// `on_eval` sees every evaluated value in order.
template <typename Objective>
NelderMeadResult nelder_mead(Objective&& f, std::vector<double> start,
                             const NelderMeadOptions& options,
                             const std::function<void(double)>& on_eval = {}) {
  const std::size_t dim = start.size();
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    ++result.evaluations;
    if (on_eval) on_eval(v);
    return v;
  };

  std::vector<std::vector<double>> simplex{start};
  for (std::size_t i = 0; i < dim; ++i) {
    auto v = start;
    v[i] += options.initial_step;
    simplex.push_back(std::move(v));
  }
  std::vector<double> values;
  for (const auto& v : simplex) values.push_back(eval(v));

  std::vector<std::size_t> idx(dim + 1);
  while (result.evaluations < options.max_evaluations) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const auto best = idx.front(), worst = idx.back(), second = idx[dim - 1];
    if (values[worst] - values[best] < options.tolerance) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto i = idx[k];
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d] / static_cast<double>(dim);
    }
    const auto along = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      return p;
    };

    auto reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = result.evaluations < options.max_evaluations ? eval(expanded) : fr + 1;
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    auto contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = std::move(contracted);
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 1; k <= dim && result.evaluations < options.max_evaluations; ++k) {
      const auto i = idx[k];
      for (std::size_t d = 0; d < dim; ++d) {
        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      }
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

}  // namespace metasolve
