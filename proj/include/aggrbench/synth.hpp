#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aggrbench/graph.hpp"

namespace aggr {

enum class Family { erdos_renyi, chung_lu_powerlaw, watts_strogatz };

std::string to_string(Family f);
/// Accepts er / erdos_renyi, cl / chung_lu / powerlaw, ws / watts_strogatz.
Family parse_family(std::string_view s);

struct SynthSpec {
  Family family = Family::erdos_renyi;
  std::size_t num_vertices = 10000;
  double density = 0.01;       // erdos_renyi
  double exponent = 2.5;       // chung_lu_powerlaw
  double mean_degree = 20.0;   // chung_lu_powerlaw
  std::size_t ring_degree = 10;  // watts_strogatz, even
  double rewire_p = 0.1;       // watts_strogatz
  std::uint64_t seed = 0;

  /// Throws ValidationError when a family parameter is out of its domain.
  void validate() const;
};

/// Every ordered pair (u, v), u != v, present independently with probability `density`.
CooGraph gen_erdos_renyi(std::size_t n, double density, std::uint64_t seed);

/// Expected-degree weights w_i proportional to (i + 1)^(-1/(exponent - 1)),
/// scaled so their mean is `mean_degree` with no weight above sqrt(sum w);
/// edge (u, v) is kept with probability min(1, w_u * w_v / sum w).
CooGraph gen_chung_lu_powerlaw(std::size_t n, double exponent, double mean_degree, std::uint64_t seed);

/// The weights gen_chung_lu_powerlaw samples from.
std::vector<double> chung_lu_weights(std::size_t n, double exponent, double mean_degree);

/// Ring lattice of even degree k with each edge rewired with probability p,
/// emitted in both directions.
CooGraph gen_watts_strogatz(std::size_t n, std::size_t k, double p, std::uint64_t seed);

CooGraph generate(const SynthSpec& spec);

/// Transitivity of the unrewired ring lattice, 3(k - 2) / (4(k - 1)).
double ring_lattice_clustering(std::size_t k);

}  // namespace aggr
