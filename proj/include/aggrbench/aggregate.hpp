#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aggrbench/features.hpp"
#include "aggrbench/graph.hpp"
#include "aggrbench/parallel.hpp"

namespace aggr {

enum class ReduceOp { add, max, mean };

// Taxonomy: scatter and push are edge-centric, reduce and pull vertex-centric;
// scatter/reduce pass explicit messages, pull/push are the matrix (SpMM) view.
enum class Abstraction { scatter, reduce, pull, push };

std::string to_string(ReduceOp op);
std::string to_string(Abstraction a);
ReduceOp parse_reduce_op(std::string_view s);
Abstraction parse_abstraction(std::string_view s);

/// Exact element-level traffic of one aggregation.
///   messages_materialized  elements written to an explicit per-edge buffer
///   feature_reads          elements loaded from vertex features or messages
///   feature_writes         elements stored to messages, partial sums or output
///   partial_sum_elements   peak elements of accumulator storage
///   edges_traversed        edges visited
struct CostCounters {
  std::uint64_t messages_materialized = 0;
  std::uint64_t feature_reads = 0;
  std::uint64_t feature_writes = 0;
  std::uint64_t partial_sum_elements = 0;
  std::uint64_t edges_traversed = 0;

  CostCounters& operator+=(const CostCounters& o) noexcept;
  friend bool operator==(const CostCounters&, const CostCounters&) = default;
};

/// Per-edge scalars aligned with the entry order of the graph they are passed
/// with. Empty means unweighted.
using EdgeWeights = std::span<const float>;

struct Aggregation {
  FeatureMatrix features;
  CostCounters counters;
};

/// Row e holds the message of the e-th COO edge.
struct MessageBuffer {
  FeatureMatrix messages;
  CostCounters counters;
};

// Every kernel leaves its inputs untouched and returns fresh storage.
// Empty neighbourhoods aggregate to zero for all operators; mean divides by the
// number of incoming edges, duplicates included.

MessageBuffer scatter_messages(const CooGraph& g, const FeatureMatrix& x, EdgeWeights weights = {},
                               const ExecPolicy& policy = {});

Aggregation gather_reduce(const FeatureMatrix& messages, const CooGraph& g, ReduceOp op,
                          const ExecPolicy& policy = {});

/// gather_reduce(scatter_messages(g, x, weights), g, op) with the counters of both stages.
Aggregation scatter_aggregate(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights = {},
                              const ExecPolicy& policy = {});

/// Segmented reduction over CSR rows through an F-wide accumulator.
Aggregation reduce_aggregate(const CsrGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights = {},
                             const ExecPolicy& policy = {});

/// Row-wise SpMM, A-hat * X. `op` generalises the semiring; add is the matrix product.
Aggregation pull_spmm(const CsrGraph& g, const FeatureMatrix& x, EdgeWeights weights = {},
                      ReduceOp op = ReduceOp::add, const ExecPolicy& policy = {});

/// Column-wise SpMM: each source row is broadcast into an N x F partial-sum matrix.
Aggregation push_spmm(const CscGraph& g, const FeatureMatrix& x, EdgeWeights weights = {},
                      ReduceOp op = ReduceOp::add, const ExecPolicy& policy = {});

// ---------------------------------------------------------------------------
// Dense brute-force reference
// ---------------------------------------------------------------------------

/// Double-precision ground truth. `magnitude` holds, per element, the sum of
/// |w * x| over the contributing messages (divided by in-degree for mean) and
/// scales the relative error of add/mean comparisons.
struct DenseReference {
  std::size_t rows = 0;
  std::size_t cols = 0;
  ReduceOp op = ReduceOp::add;
  std::vector<double> values;
  std::vector<double> magnitude;

  FeatureMatrix to_features() const;
};

/// Builds the explicit N x N adjacency (duplicate weights summed) for add/mean;
/// max scans each destination's messages with the same single-precision
/// products the kernels form, so max comparisons are exact.
DenseReference dense_reference(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights = {});

FeatureMatrix dense_oracle(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights = {});

struct Comparison {
  bool ok = true;
  double max_relative_error = 0.0;
  std::size_t mismatches = 0;
  std::optional<std::size_t> first_mismatch;  // flat element index
};

/// add/mean: |got - ref| <= rtol * max(|ref|, magnitude); max: bitwise equality.
Comparison compare(const FeatureMatrix& got, const DenseReference& ref, double rtol);

/// Tolerance check between two kernel outputs without a dense reference:
/// |got - expected| <= rtol * max(|got|, |expected|, magnitude). `magnitude`,
/// when given, is the aggregation of |w| * |x| (see aggregate_magnitude).
/// Exact when rtol == 0.
Comparison compare(const FeatureMatrix& got, const FeatureMatrix& expected, double rtol,
                   const FeatureMatrix* magnitude = nullptr);

/// Aggregates |w| * |x| with add (or mean), the per-element scale of the
/// floating-point error in an add/mean aggregation.
FeatureMatrix aggregate_magnitude(const CsrGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights = {});

}  // namespace aggr
