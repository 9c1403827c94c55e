#include <algorithm>
#include <cmath>
#include <random>

#include "disagg/error.hpp"
#include "disagg/io.hpp"

namespace disagg::io {

namespace {

// Uniform [0, 1) from the top 53 bits.
double canonical(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Graph generate_powerlaw(Index n, double gamma, std::uint64_t seed) {
  if (n < 4) throw DomainError("generate_powerlaw: n must be at least 4");
  if (!(gamma > 2.0 && gamma < 3.0)) throw DomainError("generate_powerlaw: exponent must lie in (2, 3)");

  // Expected degrees w_i = w_min ((i+1)/n)^{-1/(gamma-1)}: the last vertex
  // expects w_min neighbours, the first ones form the heavy tail.
  const double w_min = std::max(2.0, std::log(static_cast<double>(n)) + 2.0);
  const double expo = -1.0 / (gamma - 1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = w_min * std::pow(static_cast<double>(i + 1) / static_cast<double>(n), expo);
  double total = 0.0;
  for (double x : w) total += x;

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Edge<double>> edges;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double p = std::min(1.0, w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] / total);
        if (canonical(rng) < p) edges.push_back({i, j, 1.0});
      }
    }
    Graph g(n, std::move(edges));
    if (is_connected(g)) return g;
  }
  throw ConvergenceError("generate_powerlaw: no connected sample in 100 attempts");
}

}  // namespace disagg::io
