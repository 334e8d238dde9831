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

#include <cstdint>
#include <optional>
#include <vector>

#include "metasolve/formats.hpp"

namespace metasolve {

/// values[v - 1] is the value of variable v.
struct Assignment {
  std::vector<bool> values;
  bool operator==(const Assignment&) const = default;
};

struct SatResult {
  bool satisfiable = false;
  Assignment assignment;  // total when satisfiable
  bool operator==(const SatResult&) const = default;
};

inline bool verify(const CnfFormula& formula, const Assignment& assignment) {
  if (assignment.values.size() != static_cast<std::size_t>(formula.num_vars)) return false;
  for (const auto& clause : formula.clauses) {
    bool sat = false;
    for (int lit : clause) {
      const bool v = assignment.values[static_cast<std::size_t>(std::abs(lit) - 1)];
      if ((lit > 0) == v) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

namespace detail {

// DPLL over a partial assignment: 0 unassigned, +1 true, -1 false.
class Dpll {
 public:
  explicit Dpll(const CnfFormula& f) : f_(f), value_(static_cast<std::size_t>(f.num_vars) + 1, 0) {}

  bool solve() { return search(); }

  Assignment assignment() const {
    Assignment a;
    for (int v = 1; v <= f_.num_vars; ++v) a.values.push_back(value_[static_cast<std::size_t>(v)] > 0);
    return a;
  }

 private:
  int lit_value(int lit) const {
    const int v = value_[static_cast<std::size_t>(std::abs(lit))];
    return lit > 0 ? v : -v;
  }

  void assign(int lit, std::vector<int>& trail) {
    value_[static_cast<std::size_t>(std::abs(lit))] = lit > 0 ? 1 : -1;
    trail.push_back(std::abs(lit));
  }

  void undo(std::vector<int>& trail) {
    for (int v : trail) value_[static_cast<std::size_t>(v)] = 0;
    trail.clear();
  }

  /// Unit propagation and pure-literal elimination to a fixpoint. Returns
  /// false on a conflict.
  bool simplify(std::vector<int>& trail) {
    for (;;) {
      bool changed = false;
      for (const auto& clause : f_.clauses) {
        int unassigned = 0, last = 0;
        bool sat = false;
        for (int lit : clause) {
          const int lv = lit_value(lit);
          if (lv > 0) {
            sat = true;
            break;
          }
          if (lv == 0) {
            ++unassigned;
            last = lit;
          }
        }
        if (sat) continue;
        if (unassigned == 0) return false;
        if (unassigned == 1) {
          assign(last, trail);
          changed = true;
        }
      }
      if (changed) continue;
      // Pure literals among the unsatisfied clauses.
      std::vector<int> polarity(value_.size(), 0);  // bit 1: positive, bit 2: negative
      for (const auto& clause : f_.clauses) {
        if (satisfied(clause)) continue;
        for (int lit : clause) {
          if (lit_value(lit) == 0) polarity[static_cast<std::size_t>(std::abs(lit))] |= lit > 0 ? 1 : 2;
        }
      }
      for (std::size_t v = 1; v < value_.size(); ++v) {
        if (value_[v] == 0 && (polarity[v] == 1 || polarity[v] == 2)) {
          assign(polarity[v] == 1 ? static_cast<int>(v) : -static_cast<int>(v), trail);
          changed = true;
        }
      }
      if (!changed) return true;
    }
  }

  bool satisfied(const std::vector<int>& clause) const {
    for (int lit : clause) {
      if (lit_value(lit) > 0) return true;
    }
    return false;
  }

  /// Highest occurrence count among unsatisfied clauses; ties to lowest index.
  int pick_branch() const {
    std::vector<int> occurrences(value_.size(), 0);
    for (const auto& clause : f_.clauses) {
      if (satisfied(clause)) continue;
      for (int lit : clause) {
        if (lit_value(lit) == 0) ++occurrences[static_cast<std::size_t>(std::abs(lit))];
      }
    }
    int best = 0;
    for (std::size_t v = 1; v < occurrences.size(); ++v) {
      if (occurrences[v] > 0 && (best == 0 || occurrences[v] > occurrences[static_cast<std::size_t>(best)])) {
        best = static_cast<int>(v);
      }
    }
    return best;
  }

  bool search() {
    std::vector<int> trail;
    if (!simplify(trail)) {
      undo(trail);
      return false;
    }
    const int var = pick_branch();
    if (var == 0) return true;  // every clause satisfied
    for (int lit : {var, -var}) {
      std::vector<int> branch;
      assign(lit, branch);
      if (search()) return true;
      undo(branch);
    }
    undo(trail);
    return false;
  }

  const CnfFormula& f_;
  std::vector<int> value_;
};

}  // namespace detail

/// Complete DPLL search. Variables left unassigned in a satisfying partial
/// assignment are completed as false.
inline SatResult dpll_solve(const CnfFormula& formula) {
  detail::Dpll solver(formula);
  SatResult result;
  result.satisfiable = solver.solve();
  if (result.satisfiable) result.assignment = solver.assignment();
  return result;
}

}  // namespace metasolve
