#include "aggrbench/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aggrbench/error.hpp"

namespace aggr {

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

std::string shape(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

void check_vertex_features(const char* kernel, std::size_t num_vertices, const FeatureMatrix& x) {
  if (x.rows() != num_vertices) {
    throw ContractError(std::string(kernel) + ": features have " + std::to_string(x.rows()) +
                        " rows but the graph has " + std::to_string(num_vertices) + " vertices");
  }
}

void check_weights(const char* kernel, std::size_t num_edges, EdgeWeights w) {
  if (!w.empty() && w.size() != num_edges) {
    throw ContractError(std::string(kernel) + ": " + std::to_string(w.size()) + " edge weights for " +
                        std::to_string(num_edges) + " edges");
  }
}

void check_source_sorted(const char* kernel, const CooGraph& g) {
  if (g.sorted_by != EdgeOrder::source) {
    throw ContractError(std::string(kernel) + ": COO must be sorted by source vertex");
  }
}

// Folds one message row into an accumulator row.
inline void accumulate(std::span<float> acc, const float* src, float w, bool weighted, ReduceOp op) noexcept {
  const std::size_t f = acc.size();
  if (op == ReduceOp::max) {
    if (weighted) {
      for (std::size_t k = 0; k < f; ++k) {
        const float m = w * src[k];
        if (m > acc[k]) acc[k] = m;
      }
    } else {
      for (std::size_t k = 0; k < f; ++k) {
        if (src[k] > acc[k]) acc[k] = src[k];
      }
    }
  } else if (weighted) {
    for (std::size_t k = 0; k < f; ++k) acc[k] += w * src[k];
  } else {
    for (std::size_t k = 0; k < f; ++k) acc[k] += src[k];
  }
}

inline float identity_of(ReduceOp op) noexcept { return op == ReduceOp::max ? kNegInf : 0.0f; }

// Turns a finished accumulator row into output: empty rows become zero, mean
// divides by the in-edge count, and max maps -0 to +0 so results do not depend
// on which of two equal zeros was seen first.
inline void finalize_row(std::span<float> row, std::size_t degree, ReduceOp op) noexcept {
  if (degree == 0) {
    std::fill(row.begin(), row.end(), 0.0f);
  } else if (op == ReduceOp::mean) {
    const float d = static_cast<float>(degree);
    for (auto& v : row) v /= d;
  } else if (op == ReduceOp::max) {
    for (auto& v : row) v += 0.0f;
  }
}

std::uint64_t mul(std::size_t a, std::size_t b) { return static_cast<std::uint64_t>(a) * b; }

}  // namespace

std::string to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::add: return "add";
    case ReduceOp::max: return "max";
    case ReduceOp::mean: return "mean";
  }
  return "?";
}

std::string to_string(Abstraction a) {
  switch (a) {
    case Abstraction::scatter: return "scatter";
    case Abstraction::reduce: return "reduce";
    case Abstraction::pull: return "pull";
    case Abstraction::push: return "push";
  }
  return "?";
}

ReduceOp parse_reduce_op(std::string_view s) {
  if (s == "add" || s == "sum") return ReduceOp::add;
  if (s == "max") return ReduceOp::max;
  if (s == "mean") return ReduceOp::mean;
  throw UsageError("unknown reduce operator `" + std::string(s) + "` (expected add, max or mean)");
}

Abstraction parse_abstraction(std::string_view s) {
  if (s == "scatter") return Abstraction::scatter;
  if (s == "reduce") return Abstraction::reduce;
  if (s == "pull") return Abstraction::pull;
  if (s == "push") return Abstraction::push;
  throw UsageError("unknown abstraction `" + std::string(s) + "` (expected scatter, reduce, pull or push)");
}

CostCounters& CostCounters::operator+=(const CostCounters& o) noexcept {
  messages_materialized += o.messages_materialized;
  feature_reads += o.feature_reads;
  feature_writes += o.feature_writes;
  partial_sum_elements = std::max(partial_sum_elements, o.partial_sum_elements);
  edges_traversed += o.edges_traversed;
  return *this;
}

// ---------------------------------------------------------------------------
// Edge-centric, explicit messages
// ---------------------------------------------------------------------------

MessageBuffer scatter_messages(const CooGraph& g, const FeatureMatrix& x, EdgeWeights weights,
                               const ExecPolicy& policy) {
  check_source_sorted("scatter_messages", g);
  check_vertex_features("scatter_messages", g.num_vertices, x);
  check_weights("scatter_messages", g.num_edges(), weights);

  const std::size_t f = x.cols();
  const std::size_t num_edges = g.num_edges();
  MessageBuffer out{FeatureMatrix(num_edges, f), {}};
  const bool weighted = !weights.empty();
  parallel_for_ranges(num_edges, policy.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const float* src = x.data() + static_cast<std::size_t>(g.edges[e].src) * f;
      float* dst = out.messages.data() + e * f;
      if (weighted) {
        const float w = weights[e];
        for (std::size_t k = 0; k < f; ++k) dst[k] = w * src[k];
      } else {
        std::copy(src, src + f, dst);
      }
    }
  });
  out.counters.messages_materialized = mul(num_edges, f);
  out.counters.feature_reads = mul(num_edges, f);
  out.counters.feature_writes = mul(num_edges, f);
  out.counters.edges_traversed = num_edges;
  return out;
}

Aggregation gather_reduce(const FeatureMatrix& messages, const CooGraph& g, ReduceOp op, const ExecPolicy& policy) {
  if (messages.rows() != g.num_edges()) {
    throw ContractError("gather_reduce: message buffer has " + std::to_string(messages.rows()) +
                        " rows but the graph has " + std::to_string(g.num_edges()) + " edges");
  }
  const std::size_t n = g.num_vertices;
  const std::size_t f = messages.cols();
  const std::size_t num_edges = g.num_edges();

  memory::tracked_vector<std::uint32_t> degree(n, 0);
  for (const auto& e : g.edges) ++degree[e.dst];

  Aggregation out{FeatureMatrix(n, f), {}};
  // Each worker owns a destination range and scans the edge list in order, so
  // every destination sees its messages in the same order as a sequential run.
  parallel_for_ranges(n, policy.threads, [&](std::size_t begin, std::size_t end) {
    if (op == ReduceOp::max) {
      for (std::size_t v = begin; v < end; ++v) {
        auto row = out.features.row(v);
        std::fill(row.begin(), row.end(), identity_of(op));
      }
    }
    for (std::size_t e = 0; e < num_edges; ++e) {
      const std::size_t v = g.edges[e].dst;
      if (v < begin || v >= end) continue;
      accumulate(out.features.row(v), messages.data() + e * f, 1.0f, false, op);
    }
    for (std::size_t v = begin; v < end; ++v) finalize_row(out.features.row(v), degree[v], op);
  });

  out.counters.feature_reads = mul(num_edges, f);
  out.counters.feature_writes = mul(num_edges, f) + (op == ReduceOp::mean ? mul(n, f) : 0);
  out.counters.partial_sum_elements = mul(n, f);
  out.counters.edges_traversed = num_edges;
  return out;
}

Aggregation scatter_aggregate(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights,
                              const ExecPolicy& policy) {
  auto msgs = scatter_messages(g, x, weights, policy);
  auto out = gather_reduce(msgs.messages, g, op, policy);
  auto counters = msgs.counters;
  counters += out.counters;
  counters.edges_traversed = g.num_edges();
  out.counters = counters;
  return out;
}

// ---------------------------------------------------------------------------
// Vertex-centric
// ---------------------------------------------------------------------------

Aggregation reduce_aggregate(const CsrGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights,
                             const ExecPolicy& policy) {
  check_vertex_features("reduce_aggregate", g.num_vertices, x);
  check_weights("reduce_aggregate", g.num_edges(), weights);
  const std::size_t n = g.num_vertices;
  const std::size_t f = x.cols();
  const bool weighted = !weights.empty();

  Aggregation out{FeatureMatrix(n, f), {}};
  parallel_for_ranges(n, policy.threads, [&](std::size_t begin, std::size_t end) {
    memory::tracked_vector<float> acc(f);
    for (std::size_t v = begin; v < end; ++v) {
      std::fill(acc.begin(), acc.end(), identity_of(op));
      for (auto e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
        accumulate(acc, x.data() + static_cast<std::size_t>(g.col_idx[e]) * f, weighted ? weights[e] : 1.0f,
                   weighted, op);
      }
      auto row = out.features.row(v);
      std::copy(acc.begin(), acc.end(), row.begin());
      finalize_row(row, g.degree(v), op);
    }
  });

  out.counters.feature_reads = mul(g.num_edges(), f);
  out.counters.feature_writes = mul(n, f);
  out.counters.partial_sum_elements = g.num_edges() > 0 ? f : 0;
  out.counters.edges_traversed = g.num_edges();
  return out;
}

Aggregation pull_spmm(const CsrGraph& g, const FeatureMatrix& x, EdgeWeights weights, ReduceOp op,
                      const ExecPolicy& policy) {
  check_vertex_features("pull_spmm", g.num_vertices, x);
  check_weights("pull_spmm", g.num_edges(), weights);
  const std::size_t n = g.num_vertices;
  const std::size_t f = x.cols();
  const bool weighted = !weights.empty();

  Aggregation out{FeatureMatrix(n, f), {}};
  parallel_for_ranges(n, policy.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      auto row = out.features.row(v);
      if (op == ReduceOp::max) std::fill(row.begin(), row.end(), kNegInf);
      for (auto e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
        accumulate(row, x.data() + static_cast<std::size_t>(g.col_idx[e]) * f, weighted ? weights[e] : 1.0f,
                   weighted, op);
      }
      finalize_row(row, g.degree(v), op);
    }
  });

  out.counters.feature_reads = mul(g.num_edges(), f);
  out.counters.feature_writes = mul(n, f);
  out.counters.edges_traversed = g.num_edges();
  return out;
}

Aggregation push_spmm(const CscGraph& g, const FeatureMatrix& x, EdgeWeights weights, ReduceOp op,
                      const ExecPolicy& policy) {
  check_vertex_features("push_spmm", g.num_vertices, x);
  check_weights("push_spmm", g.num_edges(), weights);
  const std::size_t n = g.num_vertices;
  const std::size_t f = x.cols();
  const bool weighted = !weights.empty();

  memory::tracked_vector<std::uint32_t> degree(n, 0);
  for (auto v : g.row_idx) ++degree[v];

  Aggregation out{FeatureMatrix(n, f, identity_of(op)), {}};
  // Workers own destination ranges and each walks every column, keeping the
  // per-destination accumulation order identical to the sequential pass.
  parallel_for_ranges(n, policy.threads, [&](std::size_t begin, std::size_t end) {
    const bool whole = begin == 0 && end == n;
    for (std::size_t u = 0; u < n; ++u) {
      const float* src = x.data() + u * f;
      for (auto e = g.col_ptr[u]; e < g.col_ptr[u + 1]; ++e) {
        const std::size_t v = g.row_idx[e];
        if (!whole && (v < begin || v >= end)) continue;
        accumulate(out.features.row(v), src, weighted ? weights[e] : 1.0f, weighted, op);
      }
    }
    for (std::size_t v = begin; v < end; ++v) finalize_row(out.features.row(v), degree[v], op);
  });

  out.counters.feature_reads = mul(g.num_edges(), f);
  out.counters.feature_writes = mul(g.num_edges(), f) + (op == ReduceOp::mean ? mul(n, f) : 0);
  out.counters.partial_sum_elements = mul(n, f);
  out.counters.edges_traversed = g.num_edges();
  return out;
}

// ---------------------------------------------------------------------------
// Reference and comparison
// ---------------------------------------------------------------------------

FeatureMatrix DenseReference::to_features() const {
  FeatureMatrix m(rows, cols);
  for (std::size_t i = 0; i < values.size(); ++i) m.values()[i] = static_cast<float>(values[i]);
  return m;
}

DenseReference dense_reference(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights) {
  g.validate();
  check_vertex_features("dense_oracle", g.num_vertices, x);
  check_weights("dense_oracle", g.num_edges(), weights);
  const std::size_t n = g.num_vertices;
  const std::size_t f = x.cols();
  DenseReference ref{n, f, op, std::vector<double>(n * f, 0.0), std::vector<double>(n * f, 0.0)};

  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : g.edges) ++indegree[e.dst];

  if (op == ReduceOp::max) {
    std::vector<std::vector<std::size_t>> incoming(n);
    for (std::size_t e = 0; e < g.num_edges(); ++e) incoming[g.edges[e].dst].push_back(e);
    for (std::size_t v = 0; v < n; ++v) {
      if (incoming[v].empty()) continue;
      for (std::size_t k = 0; k < f; ++k) {
        float best = kNegInf;
        for (auto e : incoming[v]) {
          const float xv = x(g.edges[e].src, k);
          const float m = weights.empty() ? xv : static_cast<float>(static_cast<double>(weights[e]) * xv);
          best = std::max(best, m);
        }
        ref.values[v * f + k] = static_cast<double>(best + 0.0f);
        ref.magnitude[v * f + k] = std::abs(static_cast<double>(best));
      }
    }
    return ref;
  }

  // A[v][u] = sum of weights over edges (u, v); |A| sums their magnitudes.
  std::vector<double> adj(n * n, 0.0);
  std::vector<double> abs_adj(n * n, 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double w = weights.empty() ? 1.0 : static_cast<double>(weights[e]);
    const std::size_t cell = static_cast<std::size_t>(g.edges[e].dst) * n + g.edges[e].src;
    adj[cell] += w;
    abs_adj[cell] += std::abs(w);
  }
  for (std::size_t v = 0; v < n; ++v) {
    double* out = ref.values.data() + v * f;
    double* mag = ref.magnitude.data() + v * f;
    for (std::size_t u = 0; u < n; ++u) {
      const double a = adj[v * n + u];
      const double b = abs_adj[v * n + u];
      if (b == 0.0) continue;
      for (std::size_t k = 0; k < f; ++k) {
        const double xv = x(u, k);
        out[k] += a * xv;
        mag[k] += b * std::abs(xv);
      }
    }
    if (op == ReduceOp::mean && indegree[v] > 0) {
      const double d = static_cast<double>(indegree[v]);
      for (std::size_t k = 0; k < f; ++k) {
        out[k] /= d;
        mag[k] /= d;
      }
    }
  }
  return ref;
}

FeatureMatrix dense_oracle(const CooGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights) {
  return dense_reference(g, x, op, weights).to_features();
}

Comparison compare(const FeatureMatrix& got, const DenseReference& ref, double rtol) {
  if (got.rows() != ref.rows || got.cols() != ref.cols) {
    throw ContractError("compare: shape " + shape(got.rows(), got.cols()) + " vs reference " +
                        shape(ref.rows, ref.cols));
  }
  Comparison c;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    const double g = got.values()[i];
    const double r = ref.values[i];
    bool ok = false;
    double rel = 0.0;
    if (ref.op == ReduceOp::max) {
      ok = static_cast<float>(g) == static_cast<float>(r) && std::signbit(g) == std::signbit(r);
      rel = ok ? 0.0 : std::abs(g - r) / std::max(std::abs(r), 1e-30);
    } else {
      const double scale = std::max(std::abs(r), ref.magnitude[i]);
      const double err = std::abs(g - r);
      rel = scale > 0.0 ? err / scale : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      ok = rel <= rtol;
    }
    c.max_relative_error = std::max(c.max_relative_error, rel);
    if (!ok) {
      c.ok = false;
      ++c.mismatches;
      if (!c.first_mismatch) c.first_mismatch = i;
    }
  }
  return c;
}

Comparison compare(const FeatureMatrix& got, const FeatureMatrix& expected, double rtol,
                   const FeatureMatrix* magnitude) {
  if (got.rows() != expected.rows() || got.cols() != expected.cols()) {
    throw ContractError("compare: shape " + shape(got.rows(), got.cols()) + " vs " +
                        shape(expected.rows(), expected.cols()));
  }
  if (magnitude && magnitude->size() != expected.size()) throw ContractError("compare: magnitude shape mismatch");
  Comparison c;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double a = got.values()[i];
    const double b = expected.values()[i];
    bool ok = false;
    double rel = 0.0;
    if (rtol == 0.0) {
      ok = got.values()[i] == expected.values()[i] && std::signbit(a) == std::signbit(b);
      rel = ok ? 0.0 : std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
    } else {
      double scale = std::max(std::abs(a), std::abs(b));
      if (magnitude) scale = std::max(scale, static_cast<double>(magnitude->values()[i]));
      const double err = std::abs(a - b);
      rel = scale > 0.0 ? err / scale : 0.0;
      ok = rel <= rtol;
    }
    c.max_relative_error = std::max(c.max_relative_error, rel);
    if (!ok) {
      c.ok = false;
      ++c.mismatches;
      if (!c.first_mismatch) c.first_mismatch = i;
    }
  }
  return c;
}

FeatureMatrix aggregate_magnitude(const CsrGraph& g, const FeatureMatrix& x, ReduceOp op, EdgeWeights weights) {
  FeatureMatrix abs_x(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) abs_x.values()[i] = std::abs(x.values()[i]);
  std::vector<float> abs_w(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) abs_w[i] = std::abs(weights[i]);
  const ReduceOp scale_op = op == ReduceOp::mean ? ReduceOp::mean : ReduceOp::add;
  return pull_spmm(g, abs_x, abs_w, scale_op).features;
}

}  // namespace aggr
