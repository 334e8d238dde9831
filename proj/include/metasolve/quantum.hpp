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

// Dense statevector simulator and a QAOA solver on top of it.
//
// Basis index z encodes qubit i in bit i; qubit value 1 is spin +1 and
// QUBO variable x_i = 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "metasolve/common.hpp"
#include "metasolve/nelder_mead.hpp"
#include "metasolve/qubo.hpp"
#include "metasolve/qubo_model.hpp"

namespace metasolve {

using Amplitude = std::complex<double>;

inline constexpr std::size_t kDefaultQubitCap = 22;

class StateVector {
 public:
  StateVector() = default;
  StateVector(std::size_t n_qubits, std::vector<Amplitude> amplitudes)
      : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != (std::size_t{1} << n_qubits_)) {
      throw Error(Errc::DimensionMismatch, "amplitude count must be 2^n");
    }
  }

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<Amplitude> amplitudes() { return amplitudes_; }
  std::span<const Amplitude> amplitudes() const { return amplitudes_; }
  Amplitude& operator[](std::size_t z) { return amplitudes_[z]; }
  const Amplitude& operator[](std::size_t z) const { return amplitudes_[z]; }

  double norm_squared() const {
    double s = 0;
    for (const auto& a : amplitudes_) s += std::norm(a);
    return s;
  }

  static StateVector basis(std::size_t n_qubits, std::size_t z) {
    std::vector<Amplitude> amps(std::size_t{1} << n_qubits, 0.0);
    amps.at(z) = 1.0;
    return StateVector(n_qubits, std::move(amps));
  }

 private:
  std::size_t n_qubits_ = 0;
  std::vector<Amplitude> amplitudes_;
};

inline void check_qubits(std::size_t n, std::size_t cap) {
  if (n > cap) {
    throw Error(Errc::TooManyQubits,
                "needs " + std::to_string(n) + " qubits, max " + std::to_string(cap));
  }
}

/// Hadamard layer on |0...0>: every amplitude 2^(-n/2).
inline StateVector uniform_state(std::size_t n_qubits, std::size_t cap = kDefaultQubitCap) {
  if (n_qubits == 0) throw Error(Errc::InvalidArgument, "need at least one qubit");
  check_qubits(n_qubits, cap);
  const std::size_t dim = std::size_t{1} << n_qubits;
  return StateVector(n_qubits, std::vector<Amplitude>(dim, 1.0 / std::sqrt(static_cast<double>(dim))));
}

/// Ising energy (without offset) of every basis state, by Gray-code walk.
inline std::vector<double> ising_diagonal(const IsingModel& ising) {
  const std::size_t n = ising.n;
  std::vector<std::vector<std::pair<std::size_t, double>>> nb(n);
  for (const auto& [key, value] : ising.J) {
    nb[key.first].emplace_back(key.second, value);
    nb[key.second].emplace_back(key.first, value);
  }
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> diag(dim);
  std::vector<int> spin(n, -1);
  double e = 0;
  for (std::size_t i = 0; i < n; ++i) e -= ising.h[i];
  for (const auto& [key, value] : ising.J) e += value;
  std::size_t z = 0;
  diag[0] = e;
  for (std::size_t k = 1; k < dim; ++k) {
    const auto i = static_cast<std::size_t>(__builtin_ctzll(k));
    double field = ising.h[i];
    for (const auto& [j, J] : nb[i]) field += J * spin[j];
    e += -2.0 * spin[i] * field;
    spin[i] = -spin[i];
    z ^= std::size_t{1} << i;
    diag[z] = e;
  }
  return diag;
}

/// Multiplies |z> by exp(-i gamma E(z)), E from a precomputed diagonal.
inline void apply_cost_layer(StateVector& state, std::span<const double> diagonal, double gamma) {
  if (diagonal.size() != state.dimension()) {
    throw Error(Errc::DimensionMismatch, "diagonal size does not match the state");
  }
  auto amps = state.amplitudes();
  for (std::size_t z = 0; z < amps.size(); ++z) {
    amps[z] *= std::polar(1.0, -gamma * diagonal[z]);
  }
}

inline void apply_cost_layer(StateVector& state, const IsingModel& ising, double gamma) {
  if (ising.n != state.n_qubits()) {
    throw Error(Errc::DimensionMismatch, "Ising model has " + std::to_string(ising.n) +
                                             " spins, state has " +
                                             std::to_string(state.n_qubits()) + " qubits");
  }
  const auto diag = ising_diagonal(ising);
  apply_cost_layer(state, diag, gamma);
}

/// RX(2 beta) on every qubit.
inline void apply_mixer_layer(StateVector& state, double beta) {
  const double c = std::cos(beta);
  const Amplitude minus_i_s(0.0, -std::sin(beta));
  auto amps = state.amplitudes();
  for (std::size_t q = 0; q < state.n_qubits(); ++q) {
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
      for (std::size_t z = base; z < base + stride; ++z) {
        const Amplitude a0 = amps[z], a1 = amps[z + stride];
        amps[z] = c * a0 + minus_i_s * a1;
        amps[z + stride] = minus_i_s * a0 + c * a1;
      }
    }
  }
}

struct QaoaParams {
  std::size_t p = 1;
  std::vector<double> gammas;
  std::vector<double> betas;

  static QaoaParams zeros(std::size_t p) { return {p, std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)}; }
  void validate() const {
    if (p == 0) throw Error(Errc::InvalidArgument, "QAOA depth p must be >= 1");
    if (gammas.size() != p || betas.size() != p) {
      throw Error(Errc::InvalidArgument, "QAOA needs p gammas and p betas");
    }
  }
  bool operator==(const QaoaParams&) const = default;
};

/// |psi(gamma, beta)> starting from the uniform superposition.
inline StateVector qaoa_state(const IsingModel& ising, std::span<const double> diagonal,
                              const QaoaParams& params, std::size_t cap = kDefaultQubitCap) {
  params.validate();
  auto state = uniform_state(ising.n, cap);
  for (std::size_t layer = 0; layer < params.p; ++layer) {
    apply_cost_layer(state, diagonal, params.gammas[layer]);
    apply_mixer_layer(state, params.betas[layer]);
  }
  return state;
}

inline double expectation(const StateVector& state, std::span<const double> diagonal, double offset) {
  double e = 0;
  const auto amps = state.amplitudes();
  for (std::size_t z = 0; z < amps.size(); ++z) e += std::norm(amps[z]) * diagonal[z];
  return e + offset;
}

/// <psi(gamma, beta)| H_C |psi(gamma, beta)>, including the model offset.
inline double qaoa_expectation(const IsingModel& ising, const QaoaParams& params,
                               std::size_t cap = kDefaultQubitCap) {
  check_qubits(ising.n, cap);
  const auto diag = ising_diagonal(ising);
  return expectation(qaoa_state(ising, diag, params, cap), diag, ising.offset);
}

struct QaoaOptimization {
  QaoaParams params;
  double expectation = 0.0;
  std::vector<double> history;  // best-so-far after each evaluation
  std::size_t evaluations = 0;
};

struct QaoaOptions {
  std::size_t p = 2;
  std::size_t shots = 1024;
  std::size_t restarts = 3;
  std::size_t max_evaluations = 150;  // per start
  std::size_t max_qubits = kDefaultQubitCap;
};

/// Nelder-Mead from `restarts` random starts (gamma in [0, 2pi), beta in
/// [0, pi)) plus a fixed all-zero start; keeps the best.
inline QaoaOptimization optimize_qaoa(const IsingModel& ising, std::size_t p, std::size_t restarts,
                                      std::size_t max_evaluations, std::uint64_t seed,
                                      std::size_t cap = kDefaultQubitCap) {
  if (p == 0) throw Error(Errc::InvalidArgument, "QAOA depth p must be >= 1");
  check_qubits(ising.n, cap);
  if (ising.n == 0) throw Error(Errc::InvalidArgument, "need at least one qubit");
  const auto diag = ising_diagonal(ising);
  const auto unpack = [p](const std::vector<double>& x) {
    QaoaParams params{p, {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(p)},
                      {x.begin() + static_cast<std::ptrdiff_t>(p), x.end()}};
    return params;
  };
  const auto objective = [&](const std::vector<double>& x) {
    return expectation(qaoa_state(ising, diag, unpack(x), cap), diag, ising.offset);
  };

  QaoaOptimization out;
  double best = std::numeric_limits<double>::infinity();
  const auto record = [&](double v) {
    best = std::min(best, v);
    out.history.push_back(best);
  };
  NelderMeadOptions nm;
  nm.max_evaluations = max_evaluations;
  Rng rng(seed);
  for (std::size_t r = 0; r <= restarts; ++r) {
    std::vector<double> start(2 * p, 0.0);
    if (r > 0) {
      for (std::size_t k = 0; k < p; ++k) start[k] = rng.uniform(0.0, 2 * std::numbers::pi);
      for (std::size_t k = 0; k < p; ++k) start[p + k] = rng.uniform(0.0, std::numbers::pi);
    }
    auto res = nelder_mead(objective, start, nm, record);
    out.evaluations += res.evaluations;
    if (r == 0 || res.value < out.expectation) {
      out.expectation = res.value;
      out.params = unpack(res.x);
    }
  }
  return out;
}

/// Multinomial measurement in the computational basis. Samples are returned
/// in increasing basis-index order with their multiplicities; energy is left
/// at 0 for the caller to fill.
inline std::vector<Sample> sample_state(const StateVector& state, std::size_t shots,
                                        std::uint64_t seed) {
  if (shots == 0) throw Error(Errc::InvalidArgument, "shots must be >= 1");
  const auto amps = state.amplitudes();
  std::vector<double> cumulative(amps.size());
  double acc = 0;
  for (std::size_t z = 0; z < amps.size(); ++z) {
    acc += std::norm(amps[z]);
    cumulative[z] = acc;
  }
  std::vector<std::size_t> counts(amps.size(), 0);
  Rng rng(seed);
  for (std::size_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    // First z with cumulative[z] > u; its probability is strictly positive.
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto z = std::min(static_cast<std::size_t>(it - cumulative.begin()), amps.size() - 1);
    ++counts[z];
  }
  std::vector<Sample> out;
  for (std::size_t z = 0; z < counts.size(); ++z) {
    if (counts[z] == 0) continue;
    Sample sample;
    sample.bits.resize(state.n_qubits());
    for (std::size_t q = 0; q < state.n_qubits(); ++q) sample.bits[q] = (z >> q) & 1u;
    sample.count = counts[z];
    out.push_back(std::move(sample));
  }
  return out;
}

struct QaoaResult {
  Sample best;
  std::vector<double> history;
  QaoaParams params;
  double final_expectation = 0.0;
  std::size_t shots = 0;
  std::vector<Sample> samples;
};

/// Converts to Ising, optimizes the angles, samples the final state and
/// returns the lowest-energy sample (QUBO energy convention).
inline QaoaResult qaoa_solve(const QuboModel& qubo, const QaoaOptions& options, std::uint64_t seed) {
  check_qubits(qubo.n, options.max_qubits);
  QaoaResult result;
  result.shots = options.shots;
  if (qubo.n == 0) {
    result.best = Sample{{}, qubo.offset, options.shots};
    result.final_expectation = qubo.offset;
    result.params = QaoaParams::zeros(options.p);
    return result;
  }
  const auto ising = qubo_to_ising(qubo);
  auto opt = optimize_qaoa(ising, options.p, options.restarts, options.max_evaluations,
                           derive_seed(seed, "qaoa-optimize", 0, 0), options.max_qubits);
  result.history = std::move(opt.history);
  result.params = opt.params;
  result.final_expectation = opt.expectation;
  const auto diag = ising_diagonal(ising);
  const auto state = qaoa_state(ising, diag, opt.params, options.max_qubits);
  result.samples = sample_state(state, options.shots, derive_seed(seed, "qaoa-sample", 0, 0));
  for (auto& s : result.samples) s.energy = qubo.energy(s.bits);
  result.best = *std::min_element(result.samples.begin(), result.samples.end(),
                                  [](const Sample& a, const Sample& b) { return a.energy < b.energy; });
  return result;
}

}  // namespace metasolve
