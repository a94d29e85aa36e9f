#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aggr {

using vertex_t = std::uint32_t;

struct Edge {
  vertex_t src = 0;
  vertex_t dst = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class EdgeOrder { unsorted, source, destination };

/// Coordinate edge list. Kernels that consume it expect `sorted_by == source`.
struct CooGraph {
  std::size_t num_vertices = 0;
  std::vector<Edge> edges;
  std::optional<std::vector<float>> weights;
  EdgeOrder sorted_by = EdgeOrder::unsorted;

  std::size_t num_edges() const noexcept { return edges.size(); }
  bool weighted() const noexcept { return weights.has_value(); }
  std::span<const float> weight_span() const noexcept {
    return weights ? std::span<const float>(*weights) : std::span<const float>{};
  }

  /// Throws ValidationError when an id is out of range, the weights are
  /// misaligned, or the sort flag does not hold.
  void validate() const;
};

/// Destination-major compressed adjacency: row v lists the sources u of every
/// edge (u, v), ascending. This is the pull direction.
struct CsrGraph {
  std::size_t num_vertices = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<vertex_t> col_idx;
  std::optional<std::vector<float>> weights;

  std::size_t num_edges() const noexcept { return col_idx.size(); }
  std::size_t degree(std::size_t row) const noexcept { return row_ptr[row + 1] - row_ptr[row]; }
  std::span<const float> weight_span() const noexcept {
    return weights ? std::span<const float>(*weights) : std::span<const float>{};
  }
  void validate() const;
};

/// Source-major compressed adjacency: column u lists the destinations v of
/// every edge (u, v), ascending. This is the push direction.
struct CscGraph {
  std::size_t num_vertices = 0;
  std::vector<std::size_t> col_ptr;
  std::vector<vertex_t> row_idx;
  std::optional<std::vector<float>> weights;

  std::size_t num_edges() const noexcept { return row_idx.size(); }
  std::size_t degree(std::size_t col) const noexcept { return col_ptr[col + 1] - col_ptr[col]; }
  std::span<const float> weight_span() const noexcept {
    return weights ? std::span<const float>(*weights) : std::span<const float>{};
  }
  void validate() const;
};

struct GraphStats {
  std::size_t num_vertices = 0;
  std::size_t num_edges = 0;
  double density = 0.0;
  std::size_t max_in_degree = 0;
  double mean_in_degree = 0.0;
  double load_imbalance = 0.0;
  std::optional<double> powerlaw_exponent_mle;
  std::optional<std::size_t> powerlaw_dmin;
  double global_clustering_coefficient = 0.0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

// ---------------------------------------------------------------------------
// Construction and conversion
// ---------------------------------------------------------------------------

/// Builds a source-sorted COO. Sorting is stable on (source, destination), so
/// duplicate edges keep their input order together with their weights.
CooGraph from_edge_list(std::span<const Edge> edges, std::size_t num_vertices,
                        std::optional<std::vector<float>> weights = std::nullopt);

/// Re-sorts an arbitrary COO by (source, destination), stable.
CooGraph sort_by_source(CooGraph g);

/// For every CSR entry, the index of the COO edge it came from. Entries are
/// grouped by destination with sources ascending; equal (source, destination)
/// pairs keep COO order.
std::vector<std::size_t> csr_entry_order(const CooGraph& g);

/// Same for CSC: grouped by source, destinations ascending.
std::vector<std::size_t> csc_entry_order(const CooGraph& g);

CsrGraph coo_to_csr(const CooGraph& g);
CscGraph coo_to_csc(const CooGraph& g);
CooGraph csr_to_coo(const CsrGraph& g);
CooGraph csc_to_coo(const CscGraph& g);

/// Union of the edge set with its reverse; duplicate pairs collapse to one.
CooGraph symmetrize(const CooGraph& g);

std::vector<std::size_t> in_degrees(const CooGraph& g);

// ---------------------------------------------------------------------------
// Structural statistics
// ---------------------------------------------------------------------------

/// Discrete power-law MLE, alpha = 1 + n / sum(ln(d / (d_min - 0.5))), over
/// the degrees >= d_min. Empty when fewer than `min_samples` qualify.
std::optional<double> powerlaw_mle(std::span<const std::size_t> degrees, std::size_t d_min,
                                   std::size_t min_samples = 10);

struct PowerlawFit {
  double alpha = 0.0;
  std::size_t d_min = 0;
  double ks_distance = 0.0;
};

/// Scans candidate lower cut-offs and keeps the one whose fitted tail has the
/// smallest Kolmogorov-Smirnov distance to the empirical tail.
std::optional<PowerlawFit> fit_powerlaw(std::span<const std::size_t> degrees,
                                        std::size_t min_dmin = 2, std::size_t min_samples = 10);

/// Transitivity of the undirected simple projection: 3 * triangles / connected
/// triples. Zero when there are no triples.
double global_clustering(const CooGraph& g);

GraphStats compute_stats(const CooGraph& g);

// ---------------------------------------------------------------------------
// Edge-list text format: `<src> <dst> [weight]` per line, `#` comments.
// ---------------------------------------------------------------------------

struct EdgeListOptions {
  std::optional<std::size_t> num_vertices;  // default: 1 + max id
};

CooGraph read_edge_list(std::istream& in, const EdgeListOptions& opts = {});
CooGraph read_edge_list(const std::filesystem::path& path, const EdgeListOptions& opts = {});
void write_edge_list(std::ostream& out, const CooGraph& g);
void write_edge_list(const std::filesystem::path& path, const CooGraph& g);

std::string to_string(EdgeOrder order);

}  // namespace aggr
