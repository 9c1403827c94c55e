#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "disagg/error.hpp"
#include "disagg/graph.hpp"

namespace disagg {

enum class TemplateKind { cycle, clique, path, custom };

/// Structure placed among the d disaggregates of one split vertex.
template <typename Scalar = double>
struct LocalTemplate {
  TemplateKind kind = TemplateKind::cycle;
  std::vector<Edge<Scalar>> custom_edges;

  static LocalTemplate cycle() { return {TemplateKind::cycle, {}}; }
  static LocalTemplate clique() { return {TemplateKind::clique, {}}; }
  static LocalTemplate path() { return {TemplateKind::path, {}}; }
  static LocalTemplate custom(std::vector<Edge<Scalar>> edges) {
    return {TemplateKind::custom, std::move(edges)};
  }

  /// Template edges on `d` local vertices with their default weights
  /// (1 for the named kinds, the stored weights for custom). A 2-cycle is a
  /// single edge.
  std::vector<Edge<Scalar>> edges(Index d) const {
    std::vector<Edge<Scalar>> out;
    switch (kind) {
      case TemplateKind::cycle:
        for (Index p = 0; p + 1 < d; ++p) out.push_back({p, p + 1, Scalar(1)});
        if (d >= 3) out.push_back({d - 1, 0, Scalar(1)});
        break;
      case TemplateKind::clique:
        for (Index p = 0; p < d; ++p)
          for (Index q = p + 1; q < d; ++q) out.push_back({p, q, Scalar(1)});
        break;
      case TemplateKind::path:
        for (Index p = 0; p + 1 < d; ++p) out.push_back({p, p + 1, Scalar(1)});
        break;
      case TemplateKind::custom:
        out = custom_edges;
        break;
    }
    return out;
  }
};

inline const char* to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::cycle: return "cycle";
    case TemplateKind::clique: return "clique";
    case TemplateKind::path: return "path";
    case TemplateKind::custom: return "custom";
  }
  return "?";
}

/// Unit-weight Laplacian of the template topology on d vertices.
template <typename Scalar>
Matrix<Scalar> template_laplacian(const LocalTemplate<Scalar>& local, Index d) {
  Matrix<Scalar> l = Matrix<Scalar>::Zero(d, d);
  for (const auto& e : local.edges(d)) {
    l(e.i, e.j) -= Scalar(1);
    l(e.j, e.i) -= Scalar(1);
    l(e.i, e.i) += Scalar(1);
    l(e.j, e.j) += Scalar(1);
  }
  return l;
}

/// One vertex split. An empty `assignment` means round-robin over the
/// disaggregates in edge-id order; empty `internal_weights` means the
/// template's default weights.
template <typename Scalar = double>
struct Split {
  Index vertex = 0;
  Index d = 2;
  LocalTemplate<Scalar> local = LocalTemplate<Scalar>::cycle();
  std::map<Index, Index> assignment;  // neighbor -> disaggregate in [0, d)
  std::vector<Scalar> internal_weights;
};

template <typename Scalar = double>
struct DisaggregationPlan {
  std::vector<Split<Scalar>> splits;

  bool empty() const { return splits.empty(); }
  Index split_count() const { return static_cast<Index>(splits.size()); }
  Index disaggregated_count() const {
    Index s = 0;
    for (const auto& sp : splits) s += sp.d;
    return s;
  }
};

/// How many disaggregates a vertex above the threshold receives. Both rules
/// are capped at the vertex's edge count.
struct MultiplicityRule {
  enum class Kind { ratio, fixed };
  Kind kind = Kind::ratio;
  double value = 0.0;  // ratio divisor (0: use the threshold) or fixed d

  static MultiplicityRule ratio(double divisor = 0.0) { return {Kind::ratio, divisor}; }
  static MultiplicityRule fixed(Index d) { return {Kind::fixed, static_cast<double>(d)}; }

  Index operator()(double weighted_degree, Index edge_count, double threshold) const {
    Index d = 0;
    if (kind == Kind::ratio) {
      const double c = value > 0.0 ? value : threshold;
      d = static_cast<Index>(std::ceil(weighted_degree / c));
    } else {
      d = static_cast<Index>(value);
    }
    return std::min(d, edge_count);
  }
};

struct VertexOrigin {
  Index vertex = 0;  // vertex of the source graph
  Index group = -1;  // split group, -1 when the vertex was not split
  Index local = 0;   // position inside the group
};

struct SplitGroup {
  Index vertex = 0;
  Index d = 0;
  Index offset = 0;                 // first vertex of the group in G_D
  std::vector<Index> internal_edges;  // edge ids in G_D, template order
};

/// The disaggregated graph together with every operator relating it to the
/// source graph. Vertices are numbered group by group (in plan order), then
/// the untouched vertices in increasing source id. Source edge e keeps id e
/// in G_D; internal edges follow.
template <typename Scalar = double>
struct DisaggregatedSystem {
  WeightedGraph<Scalar> source;
  DisaggregationPlan<Scalar> plan;  // resolved: assignments and weights explicit
  WeightedGraph<Scalar> graph;
  Matrix<Scalar> laplacian;     // A_D
  Matrix<Scalar> prolongation;  // P, N x n
  Vector<Scalar> scaling;       // diagonal of D_s
  std::vector<SplitGroup> groups;
  std::vector<VertexOrigin> origin;  // per G_D vertex
  std::vector<Index> image;          // per source vertex: its (first) G_D vertex

  Index original_size() const { return source.size(); }
  Index size() const { return graph.size(); }
  Index split_count() const { return static_cast<Index>(groups.size()); }
  Index disaggregated_count() const { return plan.disaggregated_count(); }

  /// D_s^{-1} A_D D_s^{-1}.
  Matrix<Scalar> scaled_laplacian() const {
    const Vector<Scalar> inv = scaling.cwiseInverse();
    return inv.asDiagonal() * laplacian * inv.asDiagonal();
  }

  /// Block of A_D among the disaggregates.
  Matrix<Scalar> disaggregate_block() const {
    const Index nd = disaggregated_count();
    return laplacian.topLeftCorner(nd, nd);
  }
  /// Block of A_D among untouched vertices.
  Matrix<Scalar> untouched_block() const {
    const Index nd = disaggregated_count();
    return laplacian.bottomRightCorner(size() - nd, size() - nd);
  }
  /// Nonnegative coupling between untouched vertices (rows) and
  /// disaggregates (columns); A_D carries its negation.
  Matrix<Scalar> coupling_block() const {
    const Index nd = disaggregated_count();
    return -laplacian.bottomLeftCorner(size() - nd, nd);
  }

  /// Total weight of the local subgraph of group k.
  Scalar internal_weight(Index k) const {
    Scalar s(0);
    for (Index e : groups[static_cast<std::size_t>(k)].internal_edges) s += graph.edge(e).w;
    return s;
  }
};

namespace detail {

template <typename Scalar>
void validate_template(const LocalTemplate<Scalar>& local, Index d, const std::string& where) {
  const auto edges = local.edges(d);
  WeightedGraph<Scalar> g;
  try {
    g = WeightedGraph<Scalar>(d, edges);
  } catch (const ValidationError& err) {
    throw ValidationError(where + ": bad local template: " + err.what());
  }
  if (!is_connected(g)) throw ValidationError(where + ": local template is disconnected");
}

}  // namespace detail

/// Validates `plan` against `g` and fills in default assignments and
/// internal weights.
template <typename Scalar>
DisaggregationPlan<Scalar> resolve_plan(const WeightedGraph<Scalar>& g,
                                        const DisaggregationPlan<Scalar>& plan) {
  DisaggregationPlan<Scalar> out = plan;
  const auto inc = g.incidence();
  std::vector<char> taken(static_cast<std::size_t>(g.size()), 0);
  for (std::size_t k = 0; k < out.splits.size(); ++k) {
    auto& sp = out.splits[k];
    const std::string where = "split " + std::to_string(k) + " (vertex " + std::to_string(sp.vertex) + ")";
    if (sp.vertex < 0 || sp.vertex >= g.size()) throw ValidationError(where + ": vertex out of range");
    if (taken[static_cast<std::size_t>(sp.vertex)]) throw ValidationError(where + ": vertex split twice");
    taken[static_cast<std::size_t>(sp.vertex)] = 1;
    if (sp.d < 2) throw ValidationError(where + ": multiplicity must be at least 2");
    detail::validate_template(sp.local, sp.d, where);

    const auto tedges = sp.local.edges(sp.d);
    if (sp.internal_weights.empty()) {
      for (const auto& e : tedges) sp.internal_weights.push_back(e.w);
    } else if (sp.internal_weights.size() != tedges.size()) {
      throw ValidationError(where + ": expected " + std::to_string(tedges.size()) +
                            " internal weights, got " + std::to_string(sp.internal_weights.size()));
    }
    for (Scalar w : sp.internal_weights)
      if (!(w > Scalar(0))) throw ValidationError(where + ": internal weights must be positive");

    const auto& mine = inc[static_cast<std::size_t>(sp.vertex)];
    if (sp.assignment.empty()) {
      Index t = 0;
      for (Index e : mine) {
        const auto& ed = g.edge(e);
        sp.assignment[ed.i == sp.vertex ? ed.j : ed.i] = t % sp.d;
        ++t;
      }
    } else {
      if (sp.assignment.size() != mine.size())
        throw ValidationError(where + ": assignment covers " + std::to_string(sp.assignment.size()) +
                              " of " + std::to_string(mine.size()) + " external edges");
      for (Index e : mine) {
        const auto& ed = g.edge(e);
        const Index nbr = ed.i == sp.vertex ? ed.j : ed.i;
        auto it = sp.assignment.find(nbr);
        if (it == sp.assignment.end())
          throw ValidationError(where + ": external edge to " + std::to_string(nbr) + " unassigned");
        if (it->second < 0 || it->second >= sp.d)
          throw ValidationError(where + ": disaggregate index out of range for neighbor " +
                                std::to_string(nbr));
      }
    }
  }
  return out;
}

/// 0/1 prolongation, N x n, in the canonical vertex ordering.
template <typename Scalar>
Matrix<Scalar> prolongation(const DisaggregationPlan<Scalar>& plan, Index n) {
  const Index nd = plan.disaggregated_count();
  const Index big_n = n - plan.split_count() + nd;
  Matrix<Scalar> p = Matrix<Scalar>::Zero(big_n, n);
  std::vector<char> split(static_cast<std::size_t>(n), 0);
  Index row = 0;
  for (const auto& sp : plan.splits) {
    if (sp.vertex < 0 || sp.vertex >= n) throw ValidationError("prolongation: vertex out of range");
    split[static_cast<std::size_t>(sp.vertex)] = 1;
    for (Index q = 0; q < sp.d; ++q) p(row++, sp.vertex) = Scalar(1);
  }
  for (Index v = 0; v < n; ++v)
    if (!split[static_cast<std::size_t>(v)]) p(row++, v) = Scalar(1);
  return p;
}

/// Builds G_D, A_D, P and D_s for `plan` applied to `g`.
template <typename Scalar>
DisaggregatedSystem<Scalar> apply(const WeightedGraph<Scalar>& g, const DisaggregationPlan<Scalar>& plan) {
  DisaggregatedSystem<Scalar> sys;
  sys.source = g;
  sys.plan = resolve_plan(g, plan);
  const Index n = g.size();
  const Index nd = sys.plan.disaggregated_count();
  const Index big_n = n - sys.plan.split_count() + nd;

  std::vector<Index> group_of(static_cast<std::size_t>(n), -1);
  sys.image.assign(static_cast<std::size_t>(n), -1);
  sys.origin.resize(static_cast<std::size_t>(big_n));
  sys.scaling = Vector<Scalar>::Ones(big_n);
  Index offset = 0;
  for (std::size_t k = 0; k < sys.plan.splits.size(); ++k) {
    const auto& sp = sys.plan.splits[k];
    group_of[static_cast<std::size_t>(sp.vertex)] = static_cast<Index>(k);
    sys.image[static_cast<std::size_t>(sp.vertex)] = offset;
    sys.groups.push_back({sp.vertex, sp.d, offset, {}});
    using std::sqrt;
    for (Index q = 0; q < sp.d; ++q) {
      sys.origin[static_cast<std::size_t>(offset + q)] = {sp.vertex, static_cast<Index>(k), q};
      sys.scaling(offset + q) = Scalar(1) / sqrt(Scalar(sp.d));
    }
    offset += sp.d;
  }
  for (Index v = 0; v < n; ++v) {
    if (group_of[static_cast<std::size_t>(v)] >= 0) continue;
    sys.image[static_cast<std::size_t>(v)] = offset;
    sys.origin[static_cast<std::size_t>(offset)] = {v, -1, 0};
    ++offset;
  }

  auto endpoint = [&](Index x, Index other) {
    const Index k = group_of[static_cast<std::size_t>(x)];
    if (k < 0) return sys.image[static_cast<std::size_t>(x)];
    const auto& sp = sys.plan.splits[static_cast<std::size_t>(k)];
    return sys.groups[static_cast<std::size_t>(k)].offset + sp.assignment.at(other);
  };

  std::vector<Edge<Scalar>> edges;
  edges.reserve(g.edges().size());
  for (const auto& e : g.edges()) edges.push_back({endpoint(e.i, e.j), endpoint(e.j, e.i), e.w});
  for (std::size_t k = 0; k < sys.plan.splits.size(); ++k) {
    const auto& sp = sys.plan.splits[k];
    auto& grp = sys.groups[k];
    const auto tedges = sp.local.edges(sp.d);
    for (std::size_t t = 0; t < tedges.size(); ++t) {
      grp.internal_edges.push_back(static_cast<Index>(edges.size()));
      edges.push_back({grp.offset + tedges[t].i, grp.offset + tedges[t].j, sp.internal_weights[t]});
    }
  }
  sys.graph = WeightedGraph<Scalar>(big_n, std::move(edges));
  sys.laplacian = laplacian(sys.graph);
  sys.prolongation = prolongation(sys.plan, n);
  return sys;
}

/// P~ = D_s P; its columns are orthonormal.
template <typename Scalar>
Matrix<Scalar> scaled_prolongation(const DisaggregatedSystem<Scalar>& sys) {
  return sys.scaling.asDiagonal() * sys.prolongation;
}

/// Same system with the internal edge weights of every group replaced.
/// `weights[k]` lists group k's weights in template edge order.
template <typename Scalar>
DisaggregatedSystem<Scalar> with_internal_weights(const DisaggregatedSystem<Scalar>& sys,
                                                  const std::vector<std::vector<Scalar>>& weights) {
  if (weights.size() != sys.plan.splits.size())
    throw ValidationError("with_internal_weights: one weight list per split required");
  DisaggregationPlan<Scalar> plan = sys.plan;
  for (std::size_t k = 0; k < weights.size(); ++k) plan.splits[k].internal_weights = weights[k];
  return apply(sys.source, plan);
}

/// Every internal edge of every group set to `w`.
template <typename Scalar>
DisaggregatedSystem<Scalar> with_uniform_internal_weight(const DisaggregatedSystem<Scalar>& sys, Scalar w) {
  std::vector<std::vector<Scalar>> weights;
  for (const auto& grp : sys.groups) weights.emplace_back(grp.internal_edges.size(), w);
  return with_internal_weights(sys, weights);
}

/// Lifts an eigenvector of A to G_D: P phi - s 1 with
/// s = (1/N) sum_k (d_k - 1) phi_{v_k}, so the result is orthogonal to 1.
template <typename Scalar, typename Derived>
Vector<Scalar> lift_eigvec(const DisaggregatedSystem<Scalar>& sys, const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != sys.original_size()) throw ValidationError("lift_eigvec: dimension mismatch");
  Scalar s(0);
  for (const auto& grp : sys.groups) s += Scalar(grp.d - 1) * phi(grp.vertex);
  s /= Scalar(sys.size());
  return (sys.prolongation * phi).array() - s;
}

/// Degree-weighted lift: P phi - s 1 with s the D_D-weighted mean of P phi,
/// so the result is D_D-orthogonal to 1.
template <typename Scalar, typename Derived>
Vector<Scalar> lift_eigvec_normalized(const DisaggregatedSystem<Scalar>& sys,
                                      const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != sys.original_size()) throw ValidationError("lift_eigvec_normalized: dimension mismatch");
  const Vector<Scalar> deg = sys.laplacian.diagonal();
  const Vector<Scalar> lifted = sys.prolongation * phi;
  const Scalar s = lifted.dot(deg) / deg.sum();
  return lifted.array() - s;
}

/// Splits every vertex whose weighted degree exceeds `threshold`, in
/// increasing vertex order. Vertices for which the rule yields d < 2 are
/// left alone. Assignments are left empty (round-robin on apply).
template <typename Scalar>
DisaggregationPlan<Scalar> plan_from_threshold(const WeightedGraph<Scalar>& g, double threshold,
                                               MultiplicityRule rule = MultiplicityRule::ratio(),
                                               const LocalTemplate<Scalar>& local = LocalTemplate<Scalar>::cycle()) {
  if (!(threshold > 0.0)) throw DomainError("plan_from_threshold: threshold must be positive");
  const Vector<Scalar> deg = weighted_degrees(g);
  const auto inc = g.incidence();
  DisaggregationPlan<Scalar> plan;
  for (Index v = 0; v < g.size(); ++v) {
    const double dv = static_cast<double>(deg(v));
    if (!(dv > threshold)) continue;
    const Index d = rule(dv, static_cast<Index>(inc[static_cast<std::size_t>(v)].size()), threshold);
    if (d < 2) continue;
    Split<Scalar> sp;
    sp.vertex = v;
    sp.d = d;
    sp.local = local;
    plan.splits.push_back(std::move(sp));
  }
  return plan;
}

/// The splits of a plan applied one at a time. steps[i] splits a single
/// vertex of the graph produced by steps[i-1] (steps[0] acts on the source).
template <typename Scalar = double>
struct SequentialDisaggregation {
  std::vector<DisaggregatedSystem<Scalar>> steps;
  /// For each step, the vertex being split, indexed in that step's input graph.
  std::vector<Index> split_vertex;
  /// Final vertex -> (source vertex, local index or -1 for untouched).
  std::vector<std::pair<Index, Index>> origin;
};

template <typename Scalar>
SequentialDisaggregation<Scalar> disaggregate_sequentially(const WeightedGraph<Scalar>& g,
                                                           const DisaggregationPlan<Scalar>& plan) {
  const auto resolved = resolve_plan(g, plan);
  SequentialDisaggregation<Scalar> out;
  std::map<Index, const Split<Scalar>*> split_of;
  for (const auto& sp : resolved.splits) split_of[sp.vertex] = &sp;

  std::vector<std::pair<Index, Index>> key_of(static_cast<std::size_t>(g.size()));
  for (Index v = 0; v < g.size(); ++v) key_of[static_cast<std::size_t>(v)] = {v, -1};
  std::map<std::pair<Index, Index>, Index> where;
  for (Index v = 0; v < g.size(); ++v) where[{v, -1}] = v;

  WeightedGraph<Scalar> current = g;
  for (const auto& sp : resolved.splits) {
    Split<Scalar> step = sp;
    step.vertex = where.at({sp.vertex, -1});
    step.assignment.clear();
    for (const auto& [nbr, a] : sp.assignment) {
      auto it = where.find({nbr, -1});
      Index cur = 0;
      if (it != where.end()) {
        cur = it->second;
      } else {
        // Neighbor already split: the edge sits on its assigned disaggregate.
        cur = where.at({nbr, split_of.at(nbr)->assignment.at(sp.vertex)});
      }
      step.assignment[cur] = a;
    }
    DisaggregationPlan<Scalar> single;
    single.splits.push_back(step);
    out.split_vertex.push_back(step.vertex);
    out.steps.push_back(apply(current, single));
    const auto& sys = out.steps.back();

    std::vector<std::pair<Index, Index>> next(static_cast<std::size_t>(sys.size()));
    for (Index x = 0; x < sys.size(); ++x) {
      const auto& o = sys.origin[static_cast<std::size_t>(x)];
      next[static_cast<std::size_t>(x)] =
          o.group >= 0 ? std::pair<Index, Index>{sp.vertex, o.local} : key_of[static_cast<std::size_t>(o.vertex)];
    }
    key_of = std::move(next);
    where.clear();
    for (Index x = 0; x < static_cast<Index>(key_of.size()); ++x) where[key_of[static_cast<std::size_t>(x)]] = x;
    current = sys.graph;
  }
  out.origin = key_of;
  return out;
}

}  // namespace disagg
