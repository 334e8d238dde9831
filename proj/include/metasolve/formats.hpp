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

// Readers and writers for the text formats the toolbox accepts:
// TSPLIB (TSP and CVRP), DIMACS cnf, DIMACS edge lists for MaxCut, the
// triplet QUBO format, and the plain-text solution formats.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "metasolve/common.hpp"
#include "metasolve/qubo_model.hpp"

namespace metasolve {

enum class EdgeWeightKind { Euc2d, Explicit };

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct TspInstance {
  std::string name;
  std::string comment;
  EdgeWeightKind kind = EdgeWeightKind::Euc2d;
  std::vector<Point> coords;                       // Euc2d
  std::vector<std::vector<std::int64_t>> matrix;   // Explicit, full symmetric

  std::size_t size() const {
    return kind == EdgeWeightKind::Euc2d ? coords.size() : matrix.size();
  }
  bool operator==(const TspInstance&) const = default;
};

/// Capacitated VRP. Node `depot` is the depot; every other node is a customer.
struct VrpInstance {
  TspInstance graph;
  std::int64_t capacity = 0;
  std::vector<std::int64_t> demands;
  std::size_t depot = 0;
  int vehicles = 1;

  std::size_t size() const { return graph.size(); }

  std::int64_t total_demand() const {
    std::int64_t total = 0;
    for (auto d : demands) total += d;
    return total;
  }

  /// Every demand fits a truck and the fleet covers the total demand.
  bool capacity_feasible() const {
    for (auto d : demands) {
      if (d > capacity) return false;
    }
    return total_demand() <= static_cast<std::int64_t>(vehicles) * capacity;
  }

  std::vector<std::size_t> customers() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (i != depot) out.push_back(i);
    }
    return out;
  }

  bool operator==(const VrpInstance&) const = default;
};

using RoutingInstance = std::variant<TspInstance, VrpInstance>;

struct CnfFormula {
  int num_vars = 0;
  std::vector<std::vector<int>> clauses;
  bool operator==(const CnfFormula&) const = default;
};

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;
  bool operator==(const WeightedEdge&) const = default;
};

struct MaxCutGraph {
  std::size_t n = 0;
  std::vector<WeightedEdge> edges;
  bool operator==(const MaxCutGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

/// TSPLIB nint(): round half away from zero (distances are non-negative).
inline std::int64_t tsplib_nint(double value) {
  return static_cast<std::int64_t>(value + 0.5);
}

inline std::int64_t distance(const TspInstance& instance, std::size_t i,
                             std::size_t j) {
  const std::size_t n = instance.size();
  if (i >= n || j >= n) {
    throw Error(Errc::IndexOutOfRange,
                "node pair (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") outside 0.." + std::to_string(n));
  }
  if (i == j) return 0;
  if (instance.kind == EdgeWeightKind::Explicit) return instance.matrix[i][j];
  const double dx = instance.coords[i].x - instance.coords[j].x;
  const double dy = instance.coords[i].y - instance.coords[j].y;
  return tsplib_nint(std::sqrt(dx * dx + dy * dy));
}

inline std::int64_t distance(const VrpInstance& instance, std::size_t i,
                             std::size_t j) {
  return distance(instance.graph, i, j);
}

/// Dense row-major cache of the distance function.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(const TspInstance& instance) : n_(instance.size()) {
    data_.assign(n_ * n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        const auto d = distance(instance, i, j);
        data_[i * n_ + j] = d;
        data_[j * n_ + i] = d;
      }
    }
  }

  std::size_t size() const { return n_; }
  std::int64_t operator()(std::size_t i, std::size_t j) const {
    return data_[i * n_ + j];
  }
  std::int64_t max() const {
    return data_.empty() ? 0 : *std::max_element(data_.begin(), data_.end());
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> data_;
};

// ---------------------------------------------------------------------------
// Shared text helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, int line, const char* what) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(Errc::ParseError,
                std::string("expected ") + what + ", got '" +
                    std::string(token) + "'",
                line);
  }
  return value;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

/// Vehicle count encoded as a "k<digits>" token, e.g. "P-n16-k8".
inline std::optional<int> vehicle_token(const std::string& text) {
  static const std::regex k_token(R"((?:^|[^A-Za-z0-9])[kK](\d+)(?:$|[^A-Za-z0-9]))");
  std::smatch m;
  if (std::regex_search(text, m, k_token)) return std::stoi(m[1].str());
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TSPLIB
// ---------------------------------------------------------------------------

/// Parses TSPLIB text. CVRP content (TYPE: CVRP, CAPACITY or DEMAND_SECTION)
/// yields a VrpInstance, anything else a TspInstance.
inline RoutingInstance parse_tsplib(std::string_view text) {
  using detail::tokens;
  using detail::trim;

  if (trim(text).empty()) throw Error(Errc::ParseError, "empty input", 1);

  std::string name, comment, type, weight_type, weight_format;
  std::optional<std::size_t> dimension;
  std::optional<std::int64_t> capacity;
  std::optional<int> vehicles;
  std::vector<std::optional<Point>> coords;
  std::vector<std::optional<std::int64_t>> demands;
  std::vector<std::int64_t> weights;
  std::vector<std::size_t> depots;
  bool have_coords = false, have_demands = false, have_depots = false;

  enum class Section { None, Coords, Demands, Depots, Weights, Skip };
  Section section = Section::None;

  const auto lines = detail::split_lines(text);
  const auto need_dimension = [&](int line_no) {
    if (!dimension) {
      throw Error(Errc::ParseError, "section before DIMENSION", line_no);
    }
    return *dimension;
  };

  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    const auto line = trim(lines[idx]);
    if (line.empty()) continue;
    const std::string head = detail::upper(tokens(line).front());
    if (head == "EOF") break;

    const auto colon = line.find(':');
    const bool is_keyword_line =
        colon != std::string_view::npos ||
        (std::isalpha(static_cast<unsigned char>(line.front())) &&
         head.find("_SECTION") != std::string::npos);

    if (is_keyword_line && std::isalpha(static_cast<unsigned char>(line.front()))) {
      std::string key = detail::upper(trim(line.substr(0, colon)));
      const std::string value =
          colon == std::string_view::npos
              ? std::string()
              : std::string(trim(line.substr(colon + 1)));
      if (key.find("_SECTION") != std::string::npos) {
        key = detail::upper(tokens(key).front());
        if (key == "NODE_COORD_SECTION") {
          coords.assign(need_dimension(line_no), std::nullopt);
          have_coords = true;
          section = Section::Coords;
        } else if (key == "DEMAND_SECTION") {
          demands.assign(need_dimension(line_no), std::nullopt);
          have_demands = true;
          section = Section::Demands;
        } else if (key == "DEPOT_SECTION") {
          have_depots = true;
          section = Section::Depots;
        } else if (key == "EDGE_WEIGHT_SECTION") {
          need_dimension(line_no);
          section = Section::Weights;
        } else if (key == "DISPLAY_DATA_SECTION") {
          section = Section::Skip;
        } else {
          throw Error(Errc::ParseError, "unsupported section " + key, line_no);
        }
        continue;
      }
      section = Section::None;
      if (key == "NAME") {
        name = value;
      } else if (key == "COMMENT") {
        comment = comment.empty() ? value : comment + "\n" + value;
      } else if (key == "TYPE") {
        type = detail::upper(value);
      } else if (key == "DIMENSION") {
        dimension = detail::parse_number<std::size_t>(value, line_no, "dimension");
      } else if (key == "CAPACITY") {
        capacity = detail::parse_number<std::int64_t>(value, line_no, "capacity");
      } else if (key == "VEHICLES") {
        vehicles = detail::parse_number<int>(value, line_no, "vehicle count");
      } else if (key == "EDGE_WEIGHT_TYPE") {
        weight_type = detail::upper(value);
      } else if (key == "EDGE_WEIGHT_FORMAT") {
        weight_format = detail::upper(value);
      }
      // Other keywords (DISPLAY_DATA_TYPE, NODE_COORD_TYPE, ...) carry no
      // information we use.
      continue;
    }

    const auto toks = tokens(line);
    switch (section) {
      case Section::Coords: {
        if (toks.size() != 3) {
          throw Error(Errc::ParseError, "coordinate line needs 'id x y'", line_no);
        }
        const auto id = detail::parse_number<std::size_t>(toks[0], line_no, "node id");
        if (id < 1 || id > coords.size()) {
          throw Error(Errc::ParseError, "node id out of range", line_no);
        }
        coords[id - 1] = Point{detail::parse_number<double>(toks[1], line_no, "x"),
                               detail::parse_number<double>(toks[2], line_no, "y")};
        break;
      }
      case Section::Demands: {
        if (toks.size() != 2) {
          throw Error(Errc::ParseError, "demand line needs 'id demand'", line_no);
        }
        const auto id = detail::parse_number<std::size_t>(toks[0], line_no, "node id");
        if (id < 1 || id > demands.size()) {
          throw Error(Errc::ParseError, "node id out of range", line_no);
        }
        const auto d = detail::parse_number<std::int64_t>(toks[1], line_no, "demand");
        if (d < 0) throw Error(Errc::ParseError, "negative demand", line_no);
        demands[id - 1] = d;
        break;
      }
      case Section::Depots: {
        for (auto tok : toks) {
          const auto id = detail::parse_number<long long>(tok, line_no, "depot id");
          if (id == -1) {
            section = Section::None;
            break;
          }
          if (id < 1 || static_cast<std::size_t>(id) > need_dimension(line_no)) {
            throw Error(Errc::ParseError, "depot id out of range", line_no);
          }
          depots.push_back(static_cast<std::size_t>(id - 1));
        }
        break;
      }
      case Section::Weights:
        for (auto tok : toks) {
          weights.push_back(detail::parse_number<std::int64_t>(tok, line_no, "edge weight"));
        }
        break;
      case Section::Skip:
        break;
      case Section::None:
        throw Error(Errc::ParseError, "unexpected data '" + std::string(line) + "'",
                    line_no);
    }
  }

  if (!dimension) throw Error(Errc::ParseError, "missing DIMENSION", 1);
  const std::size_t n = *dimension;

  TspInstance graph;
  graph.name = name;
  graph.comment = comment;
  if (weight_type.empty() || weight_type == "EUC_2D") {
    graph.kind = EdgeWeightKind::Euc2d;
    if (!have_coords) throw Error(Errc::ParseError, "missing NODE_COORD_SECTION", 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!coords[i]) {
        throw Error(Errc::ParseError, "missing coordinates for node " + std::to_string(i + 1), 1);
      }
      graph.coords.push_back(*coords[i]);
    }
  } else if (weight_type == "EXPLICIT") {
    graph.kind = EdgeWeightKind::Explicit;
    graph.matrix.assign(n, std::vector<std::int64_t>(n, 0));
    std::size_t k = 0;
    const auto take = [&]() {
      if (k >= weights.size()) {
        throw Error(Errc::ParseError, "EDGE_WEIGHT_SECTION too short", 1);
      }
      return weights[k++];
    };
    const std::string fmt = weight_format.empty() ? "FULL_MATRIX" : weight_format;
    if (fmt == "FULL_MATRIX") {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) graph.matrix[i][j] = take();
    } else if (fmt == "UPPER_ROW" || fmt == "UPPER_DIAG_ROW") {
      const bool diag = fmt == "UPPER_DIAG_ROW";
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = diag ? i : i + 1; j < n; ++j)
          graph.matrix[i][j] = graph.matrix[j][i] = take();
    } else if (fmt == "LOWER_ROW" || fmt == "LOWER_DIAG_ROW") {
      const bool diag = fmt == "LOWER_DIAG_ROW";
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; diag ? j <= i : j < i; ++j)
          graph.matrix[i][j] = graph.matrix[j][i] = take();
    } else {
      throw Error(Errc::UnsupportedEdgeWeightType, "EDGE_WEIGHT_FORMAT " + fmt);
    }
    if (k != weights.size()) {
      throw Error(Errc::ParseError, "EDGE_WEIGHT_SECTION has extra values", 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (graph.matrix[i][i] != 0) {
        throw Error(Errc::ParseError, "explicit matrix has non-zero diagonal", 1);
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (graph.matrix[i][j] != graph.matrix[j][i]) {
          throw Error(Errc::ParseError, "explicit matrix is not symmetric", 1);
        }
        if (graph.matrix[i][j] < 0) {
          throw Error(Errc::ParseError, "negative edge weight", 1);
        }
      }
    }
  } else {
    throw Error(Errc::UnsupportedEdgeWeightType, weight_type);
  }

  const bool is_vrp = type == "CVRP" || capacity.has_value() || have_demands;
  if (!is_vrp) {
    if (n < 3) throw Error(Errc::ParseError, "TSP needs at least 3 cities", 1);
    return graph;
  }

  VrpInstance vrp;
  vrp.graph = std::move(graph);
  if (n < 2) throw Error(Errc::ParseError, "CVRP needs a depot and a customer", 1);
  if (!capacity || *capacity <= 0) {
    throw Error(Errc::ParseError, "CVRP requires a positive CAPACITY", 1);
  }
  if (!have_demands) throw Error(Errc::ParseError, "CVRP requires DEMAND_SECTION", 1);
  vrp.capacity = *capacity;
  for (std::size_t i = 0; i < n; ++i) {
    if (!demands[i]) {
      throw Error(Errc::ParseError, "missing demand for node " + std::to_string(i + 1), 1);
    }
    vrp.demands.push_back(*demands[i]);
  }
  if (have_depots && depots.size() > 1) {
    throw Error(Errc::ParseError, "multiple depots are not supported", 1);
  }
  vrp.depot = depots.empty() ? 0 : depots.front();
  if (vrp.demands[vrp.depot] != 0) {
    throw Error(Errc::ParseError, "depot demand must be 0", 1);
  }
  if (vehicles) {
    vrp.vehicles = *vehicles;
  } else if (auto k = detail::vehicle_token(vrp.graph.name)) {
    vrp.vehicles = *k;
  } else if (auto kc = detail::vehicle_token(vrp.graph.comment)) {
    vrp.vehicles = *kc;
  } else {
    const auto total = vrp.total_demand();
    vrp.vehicles = static_cast<int>(std::max<std::int64_t>(
        1, (total + vrp.capacity - 1) / vrp.capacity));
  }
  if (vrp.vehicles <= 0) throw Error(Errc::ParseError, "vehicle count must be positive", 1);
  return vrp;
}

namespace detail {

inline void write_graph_header(std::ostringstream& out, const TspInstance& g,
                               const char* type) {
  out << "NAME : " << g.name << "\n";
  if (!g.comment.empty()) {
    for (auto line : split_lines(g.comment)) out << "COMMENT : " << line << "\n";
  }
  out << "TYPE : " << type << "\n";
  out << "DIMENSION : " << g.size() << "\n";
}

inline void write_graph_body(std::ostringstream& out, const TspInstance& g) {
  if (g.kind == EdgeWeightKind::Euc2d) {
    out << "NODE_COORD_SECTION\n";
    for (std::size_t i = 0; i < g.coords.size(); ++i) {
      out << i + 1 << " " << format_double(g.coords[i].x) << " "
          << format_double(g.coords[i].y) << "\n";
    }
  } else {
    out << "EDGE_WEIGHT_SECTION\n";
    for (const auto& row : g.matrix) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        out << (j ? " " : "") << row[j];
      }
      out << "\n";
    }
  }
}

inline void write_weight_type(std::ostringstream& out, const TspInstance& g) {
  if (g.kind == EdgeWeightKind::Euc2d) {
    out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  } else {
    out << "EDGE_WEIGHT_TYPE : EXPLICIT\n";
    out << "EDGE_WEIGHT_FORMAT : FULL_MATRIX\n";
  }
}

}  // namespace detail

inline std::string write_tsplib(const TspInstance& instance) {
  std::ostringstream out;
  detail::write_graph_header(out, instance, "TSP");
  detail::write_weight_type(out, instance);
  detail::write_graph_body(out, instance);
  out << "EOF\n";
  return out.str();
}

inline std::string write_tsplib(const VrpInstance& instance) {
  std::ostringstream out;
  detail::write_graph_header(out, instance.graph, "CVRP");
  out << "VEHICLES : " << instance.vehicles << "\n";
  detail::write_weight_type(out, instance.graph);
  out << "CAPACITY : " << instance.capacity << "\n";
  detail::write_graph_body(out, instance.graph);
  out << "DEMAND_SECTION\n";
  for (std::size_t i = 0; i < instance.demands.size(); ++i) {
    out << i + 1 << " " << instance.demands[i] << "\n";
  }
  out << "DEPOT_SECTION\n " << instance.depot + 1 << "\n -1\nEOF\n";
  return out.str();
}

inline std::string write_tsplib(const RoutingInstance& instance) {
  return std::visit([](const auto& x) { return write_tsplib(x); }, instance);
}

// ---------------------------------------------------------------------------
// DIMACS cnf
// ---------------------------------------------------------------------------

inline CnfFormula parse_dimacs(std::string_view text) {
  CnfFormula formula;
  bool have_header = false;
  std::size_t declared_clauses = 0;
  std::vector<int> current;
  int current_line = 0;
  const auto lines = detail::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    const auto line = detail::trim(lines[idx]);
    if (line.empty() || line.front() == 'c') continue;
    if (line.front() == '%') break;
    const auto toks = detail::tokens(line);
    if (toks.front() == "p") {
      if (have_header) throw Error(Errc::ParseError, "duplicate header", line_no);
      if (toks.size() != 4 || toks[1] != "cnf") {
        throw Error(Errc::ParseError, "header must be 'p cnf <vars> <clauses>'", line_no);
      }
      formula.num_vars = detail::parse_number<int>(toks[2], line_no, "variable count");
      declared_clauses = detail::parse_number<std::size_t>(toks[3], line_no, "clause count");
      if (formula.num_vars <= 0) {
        throw Error(Errc::ParseError, "variable count must be positive", line_no);
      }
      have_header = true;
      continue;
    }
    if (!have_header) throw Error(Errc::ParseError, "clause before 'p cnf' header", line_no);
    for (auto tok : toks) {
      const int lit = detail::parse_number<int>(tok, line_no, "literal");
      if (lit == 0) {
        if (current.empty()) throw Error(Errc::ParseError, "empty clause", line_no);
        formula.clauses.push_back(std::move(current));
        current.clear();
        continue;
      }
      if (std::abs(lit) > formula.num_vars) {
        throw Error(Errc::ParseError, "literal " + std::string(tok) + " exceeds variable count",
                    line_no);
      }
      if (current.empty()) current_line = line_no;
      current.push_back(lit);
    }
  }
  if (!have_header) throw Error(Errc::ParseError, "missing 'p cnf' header", 1);
  if (!current.empty()) {
    // Tolerate a final clause without its terminating 0.
    (void)current_line;
    formula.clauses.push_back(std::move(current));
  }
  if (formula.clauses.size() != declared_clauses) {
    throw Error(Errc::HeaderMismatch,
                "header declares " + std::to_string(declared_clauses) +
                    " clauses, found " + std::to_string(formula.clauses.size()));
  }
  return formula;
}

inline std::string write_dimacs(const CnfFormula& formula) {
  std::ostringstream out;
  out << "p cnf " << formula.num_vars << " " << formula.clauses.size() << "\n";
  for (const auto& clause : formula.clauses) {
    for (int lit : clause) out << lit << " ";
    out << "0\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// DIMACS edge list (MaxCut): "p edge <n> <m>" then "e <u> <v> [w]", 1-based.
// ---------------------------------------------------------------------------

inline MaxCutGraph parse_edge_list(std::string_view text) {
  MaxCutGraph graph;
  bool have_header = false;
  std::size_t declared = 0;
  const auto lines = detail::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    const auto line = detail::trim(lines[idx]);
    if (line.empty() || line.front() == 'c') continue;
    const auto toks = detail::tokens(line);
    if (toks.front() == "p") {
      if (toks.size() != 4 || (toks[1] != "edge" && toks[1] != "col")) {
        throw Error(Errc::ParseError, "header must be 'p edge <nodes> <edges>'", line_no);
      }
      graph.n = detail::parse_number<std::size_t>(toks[2], line_no, "node count");
      declared = detail::parse_number<std::size_t>(toks[3], line_no, "edge count");
      have_header = true;
    } else if (toks.front() == "e") {
      if (!have_header) throw Error(Errc::ParseError, "edge before header", line_no);
      if (toks.size() != 3 && toks.size() != 4) {
        throw Error(Errc::ParseError, "edge line needs 'e u v [w]'", line_no);
      }
      const auto u = detail::parse_number<std::size_t>(toks[1], line_no, "node");
      const auto v = detail::parse_number<std::size_t>(toks[2], line_no, "node");
      if (u < 1 || v < 1 || u > graph.n || v > graph.n) {
        throw Error(Errc::ParseError, "edge endpoint out of range", line_no);
      }
      const double w =
          toks.size() == 4 ? detail::parse_number<double>(toks[3], line_no, "weight") : 1.0;
      if (!std::isfinite(w)) throw Error(Errc::ParseError, "non-finite weight", line_no);
      graph.edges.push_back({u - 1, v - 1, w});
    } else {
      throw Error(Errc::ParseError, "unexpected line '" + std::string(line) + "'", line_no);
    }
  }
  if (!have_header) throw Error(Errc::ParseError, "missing 'p edge' header", 1);
  if (graph.n == 0) throw Error(Errc::ParseError, "graph needs at least one node", 1);
  if (graph.edges.size() != declared) {
    throw Error(Errc::HeaderMismatch, "header declares " + std::to_string(declared) +
                                          " edges, found " + std::to_string(graph.edges.size()));
  }
  return graph;
}

inline std::string write_edge_list(const MaxCutGraph& graph) {
  std::ostringstream out;
  out << "p edge " << graph.n << " " << graph.edges.size() << "\n";
  for (const auto& e : graph.edges) {
    out << "e " << e.u + 1 << " " << e.v + 1 << " " << detail::format_double(e.weight) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// QUBO triplets: "qubo <n>", optional "offset <value>", then "i j value"
// with 0-based i <= j. Repeated pairs accumulate. '#' starts a comment.
// ---------------------------------------------------------------------------

inline QuboModel parse_qubo_text(std::string_view text) {
  std::optional<QuboModel> model;
  const auto lines = detail::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const int line_no = static_cast<int>(idx) + 1;
    auto line = lines[idx];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto toks = detail::tokens(line);
    if (toks.front() == "qubo") {
      if (model) throw Error(Errc::ParseError, "duplicate header", line_no);
      if (toks.size() != 2) throw Error(Errc::ParseError, "header must be 'qubo <n>'", line_no);
      model.emplace(detail::parse_number<std::size_t>(toks[1], line_no, "variable count"));
      continue;
    }
    if (!model) throw Error(Errc::ParseError, "missing 'qubo <n>' header", line_no);
    if (toks.front() == "offset") {
      if (toks.size() != 2) throw Error(Errc::ParseError, "offset line needs a value", line_no);
      model->offset += detail::parse_number<double>(toks[1], line_no, "offset");
      continue;
    }
    if (toks.size() != 3) throw Error(Errc::ParseError, "coefficient line needs 'i j value'", line_no);
    const auto i = detail::parse_number<std::size_t>(toks[0], line_no, "index");
    const auto j = detail::parse_number<std::size_t>(toks[1], line_no, "index");
    const auto v = detail::parse_number<double>(toks[2], line_no, "coefficient");
    if (i > j) throw Error(Errc::ParseError, "coefficient indices must satisfy i <= j", line_no);
    if (j >= model->n) throw Error(Errc::ParseError, "index exceeds variable count", line_no);
    if (!std::isfinite(v)) throw Error(Errc::ParseError, "non-finite coefficient", line_no);
    model->add(i, j, v);
  }
  if (!model) throw Error(Errc::ParseError, "missing 'qubo <n>' header", 1);
  return *model;
}

inline std::string write_qubo_text(const QuboModel& model) {
  std::ostringstream out;
  out << "qubo " << model.n << "\n";
  if (model.offset != 0.0) out << "offset " << detail::format_double(model.offset) << "\n";
  for (const auto& [key, value] : model.coeffs) {
    out << key.first << " " << key.second << " " << detail::format_double(value) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Solution output
// ---------------------------------------------------------------------------

/// One line per route "route <r>: <depot> a b c <depot>" then "cost: <int>".
/// Node labels are 0-based instance indices.
inline std::string write_route_solution(const std::vector<std::vector<std::size_t>>& routes,
                                        std::size_t depot, std::int64_t cost) {
  std::ostringstream out;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    out << "route " << r + 1 << ": " << depot;
    for (auto v : routes[r]) out << " " << v;
    out << " " << depot << "\n";
  }
  out << "cost: " << cost << "\n";
  return out.str();
}

inline std::string write_sat_solution(bool satisfiable, const std::vector<bool>& values) {
  if (!satisfiable) return "UNSAT\n";
  std::ostringstream out;
  out << "SAT";
  for (std::size_t v = 0; v < values.size(); ++v) {
    out << " " << (values[v] ? "" : "-") << v + 1;
  }
  out << " 0\n";
  return out.str();
}

}  // namespace metasolve
