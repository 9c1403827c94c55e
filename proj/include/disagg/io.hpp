#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "disagg/disaggregate.hpp"
#include "disagg/graph.hpp"

namespace disagg::io {

using Graph = WeightedGraph<double>;
using Plan = DisaggregationPlan<double>;

enum class GraphFormat { automatic, matrix_market, edge_list };

/// "matrix-market" | "mm" | "edge-list" | "edges" | "auto".
GraphFormat parse_format(const std::string& name);

/// Matrix Market coordinate input, symmetric or general (general must be
/// symmetric). Off-diagonals that are all positive are read as adjacency
/// weights, all negative as a Laplacian; the diagonal is ignored.
Graph read_matrix_market(std::istream& in);

/// Lines "i j [w]", 0-based, '#' comments. A "# vertices N" line fixes the
/// vertex count; otherwise it is one past the largest id.
Graph read_edge_list(std::istream& in);

Graph read_graph(std::istream& in, GraphFormat format);

/// Automatic format picks Matrix Market for *.mtx / *.mm files.
Graph read_graph(const std::string& path, GraphFormat format = GraphFormat::automatic);

/// Weights are written with 17 significant digits, so reading back is exact.
void write_edge_list(std::ostream& out, const Graph& g);
void write_matrix_market(std::ostream& out, const Graph& g);

/// Nonzeros of P as "row col value" lines, 0-based, after a "rows cols nnz" line.
void write_prolongation(std::ostream& out, const Matrix<double>& p);

nlohmann::json plan_to_json(const Plan& plan);
Plan plan_from_json(const nlohmann::json& doc);
Plan read_plan(const std::string& path);

/// Chung-Lu graph with expected degrees proportional to (i+1)^{-1/(gamma-1)}.
/// Redraws until connected (at most 100 attempts).
Graph generate_powerlaw(Index n, double gamma, std::uint64_t seed);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

struct CheckBlock {
  std::string name;
  std::string anchor;  // short stable identifier of the property being checked
  double lhs = 0.0;
  std::string relation = "<=";  // holds when lhs <relation> rhs, up to tolerance
  double rhs = 0.0;
  bool holds = false;
  double tolerance = 0.0;
  std::string note;
};

struct Report {
  nlohmann::json document;
  std::vector<CheckBlock> checks;
  bool all_hold = true;
};

/// Every property check that applies to (g, plan). Size-limited checks
/// (exact Cheeger constants) are skipped on larger graphs.
Report run_checks(const Graph& g, const Plan& plan, double eps, const std::string& input_hash);

nlohmann::json to_json(const CheckBlock& c);

/// Entry point of the command-line tool. Exit codes: 0 success, 1 a check
/// failed or the solver did not converge, 2 usage or input error.
int run_cli(int argc, const char* const* argv);

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace disagg::io
