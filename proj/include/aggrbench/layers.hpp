#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aggrbench/aggregate.hpp"
#include "aggrbench/features.hpp"
#include "aggrbench/graph.hpp"

namespace aggr {

enum class Model { gcn, gin, gat, pdn };

std::string to_string(Model m);
Model parse_model(std::string_view s);

struct LayerSpec {
  Model model = Model::gcn;
  Abstraction abstraction = Abstraction::pull;
  ReduceOp op = ReduceOp::add;
  std::size_t in_dim = 0;
  std::size_t out_dim = 8;
  float gin_epsilon = 0.0f;
  std::size_t edge_feature_len = 4;  // PDN only
};

/// GAT has no matrix-view formulation: it only runs on scatter and reduce.
bool supports(Model model, Abstraction abstraction) noexcept;

/// Throws UsageError for an unsupported model/abstraction pair, a non-add
/// operator on a model other than GCN, or zero dimensions.
void validate(const LayerSpec& spec);

/// Learned parameters of one layer. Only the fields the model uses are read.
struct LayerParams {
  DenseWeights weight;
  std::vector<float> attention_src;  // GAT, length out_dim
  std::vector<float> attention_dst;  // GAT, length out_dim
  std::vector<float> edge_map;       // PDN, length edge_feature_len
  float edge_bias = 0.0f;            // PDN

  static LayerParams random(const LayerSpec& spec, std::uint64_t seed);
};

/// Reads a `key=path` manifest whose values are binary feature-format
/// matrices. Keys: weight, attention_src, attention_dst, edge_map, edge_bias.
LayerParams load_layer_params(const std::filesystem::path& manifest);

/// Topology a layer aggregates over, in all three formats, plus the maps that
/// carry per-edge scalars from COO order into CSR and CSC order.
struct LayerGraph {
  CooGraph coo;
  CsrGraph csr;
  CscGraph csc;
  std::vector<std::size_t> csr_from_coo;
  std::vector<std::size_t> csc_from_coo;
  std::optional<FeatureMatrix> edge_features;  // COO order, PDN only

  std::size_t num_vertices() const noexcept { return coo.num_vertices; }
  std::size_t num_edges() const noexcept { return coo.num_edges(); }
};

/// One self-loop per vertex appended to a copy of `g` (then re-sorted by source).
CooGraph add_self_loops(const CooGraph& g);

/// Builds all formats of `g`; for GCN, of `g` with self-loops added. Format
/// conversion is preprocessing and happens once, outside any timed pass.
LayerGraph prepare_layer_graph(const CooGraph& g, Model model,
                               std::optional<FeatureMatrix> edge_features = std::nullopt);

/// Runs one aggregation with per-edge scalars given in COO order, permuting
/// them into the entry order the chosen abstraction consumes.
Aggregation aggregate(const LayerGraph& g, const FeatureMatrix& x, Abstraction abstraction, ReduceOp op,
                      EdgeWeights coo_weights = {}, const ExecPolicy& policy = {});

struct GcnWeights {
  CooGraph augmented;
  memory::tracked_vector<float> weights;
};

/// Symmetric normalisation (d_u * d_v)^-1/2 with degrees counted after adding
/// one self-loop per vertex.
GcnWeights gcn_edge_weights(const CooGraph& g);

/// Normalisation for a graph that already carries its self-loops.
memory::tracked_vector<float> gcn_normalization(const CooGraph& augmented);

/// (1 + eps) * x + sum over in-neighbours of x.
Aggregation gin_aggregate(const LayerGraph& g, const FeatureMatrix& x, float epsilon, Abstraction abstraction,
                          const ExecPolicy& policy = {});

/// Single-head attention over transformed features h:
/// softmax over each destination's in-edges of LeakyReLU_0.2(a_src.h_u + a_dst.h_v).
memory::tracked_vector<float> gat_edge_weights(const CooGraph& g, const FeatureMatrix& h,
                                               std::span<const float> attention_src,
                                               std::span<const float> attention_dst);

/// sigmoid(v . e_uv + b) per edge.
memory::tracked_vector<float> pdn_edge_weights(const CooGraph& g, const FeatureMatrix& edge_features,
                                               std::span<const float> edge_map, float bias);

struct LayerOutput {
  FeatureMatrix features;
  CostCounters counters;
};

/// One inference pass. GCN, GAT and PDN transform first and aggregate the
/// out_dim-wide result; GIN aggregates the input features and transforms last.
LayerOutput forward_layer(const LayerSpec& spec, const LayerGraph& g, const FeatureMatrix& x,
                          const LayerParams& params, const ExecPolicy& policy = {});

/// Convenience overload that prepares the graph on every call.
LayerOutput forward_layer(const LayerSpec& spec, const CooGraph& g, const FeatureMatrix& x,
                          const LayerParams& params, const ExecPolicy& policy = {});

}  // namespace aggr
