#include "disagg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "disagg/error.hpp"

namespace disagg::io {

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

long long parse_integer(const std::string& tok, long line, const char* what) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ParseError(std::string("bad ") + what + " '" + tok + "'", line);
  return v;
}

double parse_real(const std::string& tok, long line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ParseError("bad number '" + tok + "'", line);
  return v;
}

using PairKey = std::pair<Index, Index>;

PairKey key(Index i, Index j) { return {std::min(i, j), std::max(i, j)}; }

}  // namespace

GraphFormat parse_format(const std::string& name) {
  const std::string s = lower(name);
  if (s == "matrix-market" || s == "mm" || s == "mtx") return GraphFormat::matrix_market;
  if (s == "edge-list" || s == "edges" || s == "edgelist") return GraphFormat::edge_list;
  if (s == "auto" || s.empty()) return GraphFormat::automatic;
  throw ValidationError("unknown graph format '" + name + "'");
}

Graph read_matrix_market(std::istream& in) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  ++lineno;
  const auto head = tokens(lower(line));
  if (head.size() < 5 || head[0] != "%%matrixmarket" || head[1] != "matrix")
    throw ParseError("missing %%MatrixMarket matrix header", lineno);
  if (head[2] != "coordinate") throw ParseError("only coordinate format is supported", lineno);
  const std::string& field = head[3];
  if (field != "real" && field != "integer" && field != "pattern")
    throw ParseError("unsupported field '" + field + "'", lineno);
  const std::string& symmetry = head[4];
  if (symmetry != "symmetric" && symmetry != "general")
    throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  std::vector<std::string> size_tok;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    size_tok = tokens(line);
    if (!size_tok.empty()) break;
  }
  if (size_tok.size() != 3) throw ParseError("expected 'rows cols entries'", lineno);
  const long long rows = parse_integer(size_tok[0], lineno, "row count");
  const long long cols = parse_integer(size_tok[1], lineno, "column count");
  const long long nnz = parse_integer(size_tok[2], lineno, "entry count");
  if (rows != cols) throw ParseError("matrix is not square", lineno);
  if (rows < 0 || nnz < 0) throw ParseError("negative dimension", lineno);

  std::map<PairKey, std::pair<double, long>> entries;  // directed (row, col) for general input
  long long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != (pattern ? 2u : 3u)) throw ParseError("wrong number of fields", lineno);
    const long long i = parse_integer(tok[0], lineno, "row index");
    const long long j = parse_integer(tok[1], lineno, "column index");
    if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError("index out of range", lineno);
    const double v = pattern ? 1.0 : parse_real(tok[2], lineno);
    ++seen;
    if (i == j) continue;
    PairKey k = symmetric ? key(i - 1, j - 1) : PairKey{i - 1, j - 1};
    if (!entries.emplace(k, std::make_pair(v, lineno)).second) throw ParseError("duplicate entry", lineno);
  }
  if (seen != nnz)
    throw ParseError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(seen), lineno);

  std::map<PairKey, std::pair<double, long>> upper;
  if (symmetric) {
    upper = std::move(entries);
  } else {
    for (const auto& [k, v] : entries) {
      const auto it = entries.find({k.second, k.first});
      if (it == entries.end() || it->second.first != v.first)
        throw ParseError("general matrix is not symmetric at (" + std::to_string(k.first + 1) + "," +
                             std::to_string(k.second + 1) + ")",
                         v.second);
      if (k.first < k.second) upper.emplace(k, v);
    }
  }

  bool any_pos = false;
  bool any_neg = false;
  for (const auto& [k, v] : upper) {
    any_pos = any_pos || v.first > 0.0;
    any_neg = any_neg || v.first < 0.0;
  }
  if (any_pos && any_neg)
    throw ParseError("off-diagonal entries have mixed signs; expected adjacency (all positive) or Laplacian (all negative)");

  std::vector<Edge<double>> edges;
  for (const auto& [k, v] : upper) {
    if (v.first == 0.0) continue;
    edges.push_back({k.first, k.second, std::abs(v.first)});
  }
  return Graph(static_cast<Index>(rows), std::move(edges));
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  long lineno = 0;
  long long declared = -1;
  long long max_id = -1;
  std::vector<Edge<double>> edges;
  std::map<PairKey, long> where;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      const auto tok = tokens(line.substr(hash + 1));
      if (tok.size() == 2 && lower(tok[0]) == "vertices") {
        declared = parse_integer(tok[1], lineno, "vertex count");
        if (declared < 0) throw ParseError("negative vertex count", lineno);
      }
      line.resize(hash);
    }
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3) throw ParseError("expected 'i j [w]'", lineno);
    const long long i = parse_integer(tok[0], lineno, "vertex id");
    const long long j = parse_integer(tok[1], lineno, "vertex id");
    const double w = tok.size() == 3 ? parse_real(tok[2], lineno) : 1.0;
    if (i < 0 || j < 0) throw ParseError("negative vertex id", lineno);
    if (i == j) throw ParseError("self-loop", lineno);
    if (!(w > 0.0)) throw ParseError("weight must be positive", lineno);
    const auto [it, fresh] = where.emplace(key(i, j), lineno);
    if (!fresh) throw ParseError("duplicate edge (first seen on line " + std::to_string(it->second) + ")", lineno);
    max_id = std::max({max_id, i, j});
    edges.push_back({static_cast<Index>(i), static_cast<Index>(j), w});
  }
  if (declared >= 0 && max_id >= declared)
    throw ParseError("vertex id " + std::to_string(max_id) + " exceeds declared count " + std::to_string(declared));
  const Index n = static_cast<Index>(declared >= 0 ? declared : max_id + 1);
  return Graph(n, std::move(edges));
}

Graph read_graph(std::istream& in, GraphFormat format) {
  if (format == GraphFormat::automatic) {
    const int c = in.peek();
    format = c == '%' ? GraphFormat::matrix_market : GraphFormat::edge_list;
  }
  return format == GraphFormat::matrix_market ? read_matrix_market(in) : read_edge_list(in);
}

Graph read_graph(const std::string& path, GraphFormat format) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  if (format == GraphFormat::automatic) {
    const std::string ext = lower(path.substr(path.find_last_of('.') == std::string::npos ? path.size()
                                                                                          : path.find_last_of('.')));
    if (ext == ".mtx" || ext == ".mm") format = GraphFormat::matrix_market;
  }
  try {
    return read_graph(in, format);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# vertices " << g.size() << '\n' << std::setprecision(17);
  for (const auto& e : g.edges()) out << e.i << ' ' << e.j << ' ' << e.w << '\n';
}

void write_matrix_market(std::ostream& out, const Graph& g) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << g.size() << ' ' << g.size() << ' ' << g.edge_count() << '\n' << std::setprecision(17);
  for (const auto& e : g.edges())
    out << std::max(e.i, e.j) + 1 << ' ' << std::min(e.i, e.j) + 1 << ' ' << e.w << '\n';
}

void write_prolongation(std::ostream& out, const Matrix<double>& p) {
  const Index nnz = (p.array() != 0.0).count();
  out << p.rows() << ' ' << p.cols() << ' ' << nnz << '\n' << std::setprecision(17);
  for (Index r = 0; r < p.rows(); ++r)
    for (Index c = 0; c < p.cols(); ++c)
      if (p(r, c) != 0.0) out << r << ' ' << c << ' ' << p(r, c) << '\n';
}

nlohmann::json plan_to_json(const Plan& plan) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& sp : plan.splits) {
    nlohmann::json s;
    s["vertex"] = sp.vertex;
    s["d"] = sp.d;
    if (sp.local.kind == TemplateKind::custom) {
      nlohmann::json edges = nlohmann::json::array();
      for (const auto& e : sp.local.custom_edges) edges.push_back({e.i, e.j, e.w});
      s["template"] = {{"custom", edges}};
    } else {
      s["template"] = to_string(sp.local.kind);
    }
    nlohmann::json assignment = nlohmann::json::array();
    for (const auto& [nbr, idx] : sp.assignment) assignment.push_back({nbr, idx});
    s["assignment"] = assignment;
    s["internal_weights"] = sp.internal_weights;
    splits.push_back(s);
  }
  return {{"splits", splits}};
}

namespace {

LocalTemplate<double> template_from_json(const nlohmann::json& t) {
  if (t.is_string()) {
    const std::string s = lower(t.get<std::string>());
    if (s == "cycle") return LocalTemplate<double>::cycle();
    if (s == "clique") return LocalTemplate<double>::clique();
    if (s == "path") return LocalTemplate<double>::path();
    throw ValidationError("unknown template '" + s + "'");
  }
  if (t.is_object() && t.contains("custom")) {
    std::vector<Edge<double>> edges;
    for (const auto& e : t.at("custom")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) throw ValidationError("custom edge must be [p, q] or [p, q, w]");
      edges.push_back({e.at(0).get<Index>(), e.at(1).get<Index>(), e.size() == 3 ? e.at(2).get<double>() : 1.0});
    }
    return LocalTemplate<double>::custom(std::move(edges));
  }
  throw ValidationError("template must be a name or {\"custom\": [...]}");
}

}  // namespace

Plan plan_from_json(const nlohmann::json& doc) {
  Plan plan;
  try {
    if (!doc.is_object() || !doc.contains("splits") || !doc.at("splits").is_array())
      throw ValidationError("plan must be an object with a 'splits' array");
    for (const auto& s : doc.at("splits")) {
      Split<double> sp;
      sp.vertex = s.at("vertex").get<Index>();
      sp.d = s.value("d", Index(2));
      if (s.contains("template")) sp.local = template_from_json(s.at("template"));
      if (s.contains("assignment")) {
        for (const auto& a : s.at("assignment")) {
          if (!a.is_array() || a.size() != 2) throw ValidationError("assignment entries must be [neighbor, index]");
          if (!sp.assignment.emplace(a.at(0).get<Index>(), a.at(1).get<Index>()).second)
            throw ValidationError("neighbor assigned twice in split of vertex " + std::to_string(sp.vertex));
        }
      }
      if (s.contains("internal_weights")) sp.internal_weights = s.at("internal_weights").get<std::vector<double>>();
      plan.splits.push_back(std::move(sp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

Plan read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return plan_from_json(doc);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace disagg::io
