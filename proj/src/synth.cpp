#include "aggrbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggrbench/error.hpp"
#include "aggrbench/random.hpp"

namespace aggr {

namespace {

// Distinct stream namespaces so families never share draws for a given seed.
constexpr std::uint64_t kErStream = 0x45520000'00000000ull;
constexpr std::uint64_t kClStream = 0x434C0000'00000000ull;
constexpr std::uint64_t kWsStream = 0x57530000'00000000ull;

CooGraph sorted_coo(std::size_t n, std::vector<Edge> edges) {
  CooGraph g;
  g.num_vertices = n;
  g.edges = std::move(edges);
  g.sorted_by = EdgeOrder::source;
  return g;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::erdos_renyi: return "erdos_renyi";
    case Family::chung_lu_powerlaw: return "chung_lu_powerlaw";
    case Family::watts_strogatz: return "watts_strogatz";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  if (s == "er" || s == "erdos_renyi" || s == "erdos-renyi") return Family::erdos_renyi;
  if (s == "cl" || s == "chung_lu" || s == "chung-lu" || s == "powerlaw" || s == "chung_lu_powerlaw") {
    return Family::chung_lu_powerlaw;
  }
  if (s == "ws" || s == "watts_strogatz" || s == "watts-strogatz") return Family::watts_strogatz;
  throw UsageError("unknown graph family `" + std::string(s) + "` (expected er, powerlaw or ws)");
}

void SynthSpec::validate() const {
  switch (family) {
    case Family::erdos_renyi:
      if (!(density > 0.0 && density <= 1.0)) {
        throw ValidationError("density must be in (0, 1], got " + std::to_string(density));
      }
      break;
    case Family::chung_lu_powerlaw:
      if (!(exponent > 1.0) || !std::isfinite(exponent)) {
        throw ValidationError("power-law exponent must be > 1, got " + std::to_string(exponent));
      }
      if (!(mean_degree > 0.0) || mean_degree >= static_cast<double>(num_vertices)) {
        throw ValidationError("mean degree must be in (0, n), got " + std::to_string(mean_degree));
      }
      break;
    case Family::watts_strogatz:
      if (ring_degree % 2 != 0) throw ValidationError("ring degree k must be even, got " + std::to_string(ring_degree));
      if (ring_degree >= num_vertices) {
        throw ValidationError("ring degree k must be < n, got k=" + std::to_string(ring_degree) +
                              " n=" + std::to_string(num_vertices));
      }
      if (!(rewire_p >= 0.0 && rewire_p <= 1.0)) {
        throw ValidationError("rewire probability must be in [0, 1], got " + std::to_string(rewire_p));
      }
      break;
  }
}

CooGraph gen_erdos_renyi(std::size_t n, double density, std::uint64_t seed) {
  SynthSpec{.family = Family::erdos_renyi, .num_vertices = n, .density = density}.validate();
  std::vector<Edge> edges;
  if (n < 2) return sorted_coo(n, std::move(edges));
  edges.reserve(static_cast<std::size_t>(density * static_cast<double>(n) * static_cast<double>(n - 1) * 1.01) + 16);

  const double log_q = std::log1p(-density);
  const std::size_t slots = n - 1;
  for (std::size_t u = 0; u < n; ++u) {
    CounterRng rng(seed, kErStream | u);
    // Geometric skipping over the n - 1 candidate targets of u.
    std::size_t j = 0;
    while (true) {
      if (density < 1.0) {
        const double skip = std::floor(std::log(rng.uniform_open0()) / log_q);
        if (skip >= static_cast<double>(slots - j)) break;
        j += static_cast<std::size_t>(skip);
      }
      if (j >= slots) break;
      const std::size_t v = j < u ? j : j + 1;
      edges.push_back({static_cast<vertex_t>(u), static_cast<vertex_t>(v)});
      ++j;
    }
  }
  return sorted_coo(n, std::move(edges));
}

std::vector<double> chung_lu_weights(std::size_t n, double exponent, double mean_degree) {
  SynthSpec{.family = Family::chung_lu_powerlaw, .num_vertices = n, .exponent = exponent, .mean_degree = mean_degree}
      .validate();
  std::vector<double> base(n);
  const double power = -1.0 / (exponent - 1.0);
  for (std::size_t i = 0; i < n; ++i) base[i] = std::pow(static_cast<double>(i + 1), power);

  const double total = mean_degree * static_cast<double>(n);
  const double cap = std::sqrt(total);
  auto capped_sum = [&](double scale) {
    double s = 0.0;
    for (auto b : base) s += std::min(scale * b, cap);
    return s;
  };
  // The capped sum is increasing in the scale; bisect for the one that hits the
  // target total. Feasible because n * cap >= total whenever mean_degree < n.
  double lo = 0.0;
  double hi = total / std::accumulate(base.begin(), base.end(), 0.0);
  while (capped_sum(hi) < total) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (capped_sum(mid) < total ? lo : hi) = mid;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::min(hi * base[i], cap);
  return w;
}

CooGraph gen_chung_lu_powerlaw(std::size_t n, double exponent, double mean_degree, std::uint64_t seed) {
  const auto w = chung_lu_weights(n, exponent, mean_degree);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(total * 1.05) + 16);

  // Weights are non-increasing in the vertex index, so for a fixed source the
  // acceptance probability only decreases along the targets and candidates can
  // be skipped geometrically with the current upper bound p.
  for (std::size_t u = 0; u < n; ++u) {
    CounterRng rng(seed, kClStream | u);
    std::size_t v = 0;
    double p = std::min(1.0, w[u] * w[0] / total);
    while (v < n && p > 0.0) {
      if (p < 1.0) {
        const double skip = std::floor(std::log(rng.uniform_open0()) / std::log1p(-p));
        if (skip >= static_cast<double>(n - v)) break;
        v += static_cast<std::size_t>(skip);
      }
      const double q = std::min(1.0, w[u] * w[v] / total);
      if (rng.uniform() < q / p && v != u) edges.push_back({static_cast<vertex_t>(u), static_cast<vertex_t>(v)});
      p = q;
      ++v;
    }
  }
  return sorted_coo(n, std::move(edges));
}

CooGraph gen_watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  SynthSpec{.family = Family::watts_strogatz, .num_vertices = n, .ring_degree = k, .rewire_p = p}.validate();
  std::vector<std::vector<vertex_t>> adj(n);
  const std::size_t half = k / 2;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t j = 1; j <= half; ++j) {
      const auto v = static_cast<vertex_t>((u + j) % n);
      adj[u].push_back(v);
      adj[v].push_back(static_cast<vertex_t>(u));
    }
  }
  auto connected = [&](std::size_t a, vertex_t b) {
    return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
  };
  auto unlink = [&](std::size_t a, vertex_t b) {
    auto& list = adj[a];
    list.erase(std::find(list.begin(), list.end(), b));
  };

  for (std::size_t j = 1; j <= half; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      CounterRng rng(seed, kWsStream | (j * n + u));
      if (!(rng.uniform() < p)) continue;
      if (adj[u].size() >= n - 1) continue;
      const auto v = static_cast<vertex_t>((u + j) % n);
      vertex_t w = 0;
      do {
        w = static_cast<vertex_t>(rng.below(n));
      } while (w == u || connected(u, w));
      unlink(u, v);
      unlink(v, static_cast<vertex_t>(u));
      adj[u].push_back(w);
      adj[w].push_back(static_cast<vertex_t>(u));
    }
  }

  std::vector<Edge> edges;
  edges.reserve(n * k);
  for (std::size_t u = 0; u < n; ++u) {
    auto& list = adj[u];
    std::sort(list.begin(), list.end());
    for (auto v : list) edges.push_back({static_cast<vertex_t>(u), v});
  }
  return sorted_coo(n, std::move(edges));
}

CooGraph generate(const SynthSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::erdos_renyi: return gen_erdos_renyi(spec.num_vertices, spec.density, spec.seed);
    case Family::chung_lu_powerlaw:
      return gen_chung_lu_powerlaw(spec.num_vertices, spec.exponent, spec.mean_degree, spec.seed);
    case Family::watts_strogatz:
      return gen_watts_strogatz(spec.num_vertices, spec.ring_degree, spec.rewire_p, spec.seed);
  }
  throw UsageError("unknown graph family");
}

double ring_lattice_clustering(std::size_t k) {
  if (k < 2) return 0.0;
  const double kd = static_cast<double>(k);
  return 3.0 * (kd - 2.0) / (4.0 * (kd - 1.0));
}

}  // namespace aggr
