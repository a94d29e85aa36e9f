#include "aggrbench/layers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "aggrbench/error.hpp"
#include "aggrbench/random.hpp"

namespace aggr {

namespace {

constexpr float kLeakySlope = 0.2f;

memory::tracked_vector<float> permute(EdgeWeights coo_weights, const std::vector<std::size_t>& order) {
  memory::tracked_vector<float> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = coo_weights[order[i]];
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<float> flatten(const FeatureMatrix& m) { return {m.values().begin(), m.values().end()}; }

}  // namespace

std::string to_string(Model m) {
  switch (m) {
    case Model::gcn: return "gcn";
    case Model::gin: return "gin";
    case Model::gat: return "gat";
    case Model::pdn: return "pdn";
  }
  return "?";
}

Model parse_model(std::string_view s) {
  if (s == "gcn") return Model::gcn;
  if (s == "gin") return Model::gin;
  if (s == "gat") return Model::gat;
  if (s == "pdn") return Model::pdn;
  throw UsageError("unknown model `" + std::string(s) + "` (expected gcn, gin, gat or pdn)");
}

bool supports(Model model, Abstraction abstraction) noexcept {
  if (model == Model::gat) return abstraction == Abstraction::scatter || abstraction == Abstraction::reduce;
  return true;
}

void validate(const LayerSpec& spec) {
  if (!supports(spec.model, spec.abstraction)) {
    throw UsageError(to_string(spec.model) + " cannot run on the " + to_string(spec.abstraction) +
                     " abstraction (attention is only available with scatter and reduce)");
  }
  if (spec.model != Model::gcn && spec.op != ReduceOp::add) {
    throw UsageError("reduce operator is fixed to add for " + to_string(spec.model) + "; only gcn accepts " +
                     to_string(spec.op));
  }
  if (spec.in_dim == 0 || spec.out_dim == 0) throw UsageError("layer dimensions must be positive");
  if (spec.model == Model::pdn && spec.edge_feature_len == 0) {
    throw UsageError("pdn needs a positive edge feature length");
  }
}

LayerParams LayerParams::random(const LayerSpec& spec, std::uint64_t seed) {
  LayerParams p;
  p.weight = DenseWeights::random(spec.in_dim, spec.out_dim, seed);
  CounterRng rng(seed, 0xA77E47ull);
  auto draw = [&](std::size_t n) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(2.0 * rng.uniform() - 1.0);
    return v;
  };
  if (spec.model == Model::gat) {
    p.attention_src = draw(spec.out_dim);
    p.attention_dst = draw(spec.out_dim);
  }
  if (spec.model == Model::pdn) p.edge_map = draw(spec.edge_feature_len);
  return p;
}

LayerParams load_layer_params(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open parameter manifest " + manifest.string());
  LayerParams p;
  bool have_weight = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("parameter manifest line " + std::to_string(line_no) + ": expected key=path");
    }
    const auto key = trim(body.substr(0, eq));
    static constexpr std::string_view kKeys[] = {"weight", "attention_src", "attention_dst", "edge_map", "edge_bias"};
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ValidationError("parameter manifest line " + std::to_string(line_no) + ": unknown key `" + key + "`");
    }
    std::filesystem::path path = trim(body.substr(eq + 1));
    if (path.is_relative()) path = manifest.parent_path() / path;
    const auto m = read_features(path);
    if (key == "weight") {
      p.weight = DenseWeights{m.rows(), m.cols(), flatten(m)};
      have_weight = true;
    } else if (key == "attention_src") {
      p.attention_src = flatten(m);
    } else if (key == "attention_dst") {
      p.attention_dst = flatten(m);
    } else if (key == "edge_map") {
      p.edge_map = flatten(m);
    } else if (key == "edge_bias") {
      if (m.size() != 1) throw ValidationError("parameter manifest: edge_bias must hold one value");
      p.edge_bias = m.values()[0];
    }
  }
  if (!have_weight) throw ValidationError("parameter manifest has no `weight` entry");
  return p;
}

CooGraph add_self_loops(const CooGraph& g) {
  g.validate();
  CooGraph out = g;
  out.edges.reserve(g.num_edges() + g.num_vertices);
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    out.edges.push_back({static_cast<vertex_t>(v), static_cast<vertex_t>(v)});
  }
  if (out.weights) out.weights->resize(out.edges.size(), 1.0f);
  out.sorted_by = EdgeOrder::unsorted;
  return sort_by_source(std::move(out));
}

LayerGraph prepare_layer_graph(const CooGraph& g, Model model, std::optional<FeatureMatrix> edge_features) {
  LayerGraph lg;
  lg.coo = model == Model::gcn ? add_self_loops(g) : (g.sorted_by == EdgeOrder::source ? g : sort_by_source(g));
  lg.coo.validate();
  lg.csr = coo_to_csr(lg.coo);
  lg.csc = coo_to_csc(lg.coo);
  lg.csr_from_coo = csr_entry_order(lg.coo);
  lg.csc_from_coo = csc_entry_order(lg.coo);
  if (edge_features) {
    if (edge_features->rows() != lg.num_edges()) {
      throw ValidationError("edge features have " + std::to_string(edge_features->rows()) + " rows for " +
                            std::to_string(lg.num_edges()) + " edges");
    }
    lg.edge_features = std::move(edge_features);
  }
  return lg;
}

Aggregation aggregate(const LayerGraph& g, const FeatureMatrix& x, Abstraction abstraction, ReduceOp op,
                      EdgeWeights coo_weights, const ExecPolicy& policy) {
  if (!coo_weights.empty() && coo_weights.size() != g.num_edges()) {
    throw ContractError("aggregate: " + std::to_string(coo_weights.size()) + " edge weights for " +
                        std::to_string(g.num_edges()) + " edges");
  }
  const bool weighted = !coo_weights.empty();
  switch (abstraction) {
    case Abstraction::scatter:
      return scatter_aggregate(g.coo, x, op, coo_weights, policy);
    case Abstraction::reduce: {
      const auto w = weighted ? permute(coo_weights, g.csr_from_coo) : memory::tracked_vector<float>{};
      return reduce_aggregate(g.csr, x, op, w, policy);
    }
    case Abstraction::pull: {
      const auto w = weighted ? permute(coo_weights, g.csr_from_coo) : memory::tracked_vector<float>{};
      return pull_spmm(g.csr, x, w, op, policy);
    }
    case Abstraction::push: {
      const auto w = weighted ? permute(coo_weights, g.csc_from_coo) : memory::tracked_vector<float>{};
      return push_spmm(g.csc, x, w, op, policy);
    }
  }
  throw UsageError("unknown abstraction");
}

memory::tracked_vector<float> gcn_normalization(const CooGraph& augmented) {
  augmented.validate();
  std::vector<double> inv_sqrt(augmented.num_vertices, 0.0);
  for (const auto& e : augmented.edges) inv_sqrt[e.dst] += 1.0;
  for (auto& d : inv_sqrt) d = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  memory::tracked_vector<float> w(augmented.num_edges());
  for (std::size_t e = 0; e < augmented.num_edges(); ++e) {
    w[e] = static_cast<float>(inv_sqrt[augmented.edges[e].src] * inv_sqrt[augmented.edges[e].dst]);
  }
  return w;
}

GcnWeights gcn_edge_weights(const CooGraph& g) {
  GcnWeights out{add_self_loops(g), {}};
  out.weights = gcn_normalization(out.augmented);
  return out;
}

Aggregation gin_aggregate(const LayerGraph& g, const FeatureMatrix& x, float epsilon, Abstraction abstraction,
                          const ExecPolicy& policy) {
  auto out = aggregate(g, x, abstraction, ReduceOp::add, {}, policy);
  const float self_scale = 1.0f + epsilon;
  auto dst = out.features.values();
  const auto src = x.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += self_scale * src[i];
  out.counters.feature_reads += x.size();
  out.counters.feature_writes += x.size();
  return out;
}

memory::tracked_vector<float> gat_edge_weights(const CooGraph& g, const FeatureMatrix& h,
                                               std::span<const float> attention_src,
                                               std::span<const float> attention_dst) {
  if (h.rows() != g.num_vertices) {
    throw ContractError("gat_edge_weights: features have " + std::to_string(h.rows()) + " rows for " +
                        std::to_string(g.num_vertices) + " vertices");
  }
  if (attention_src.size() != h.cols() || attention_dst.size() != h.cols()) {
    throw ContractError("gat_edge_weights: attention vectors must have length " + std::to_string(h.cols()));
  }
  const std::size_t n = g.num_vertices;
  memory::tracked_vector<double> src_score(n, 0.0);
  memory::tracked_vector<double> dst_score(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto row = h.row(v);
    for (std::size_t k = 0; k < row.size(); ++k) {
      src_score[v] += static_cast<double>(attention_src[k]) * row[k];
      dst_score[v] += static_cast<double>(attention_dst[k]) * row[k];
    }
  }
  auto score = [&](const Edge& e) {
    const double s = src_score[e.src] + dst_score[e.dst];
    return s > 0.0 ? s : kLeakySlope * s;
  };
  memory::tracked_vector<double> row_max(n, -std::numeric_limits<double>::infinity());
  for (const auto& e : g.edges) row_max[e.dst] = std::max(row_max[e.dst], score(e));
  memory::tracked_vector<double> row_sum(n, 0.0);
  for (const auto& e : g.edges) row_sum[e.dst] += std::exp(score(e) - row_max[e.dst]);
  memory::tracked_vector<float> alpha(g.num_edges());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto& e = g.edges[i];
    alpha[i] = static_cast<float>(std::exp(score(e) - row_max[e.dst]) / row_sum[e.dst]);
  }
  return alpha;
}

memory::tracked_vector<float> pdn_edge_weights(const CooGraph& g, const FeatureMatrix& edge_features,
                                               std::span<const float> edge_map, float bias) {
  if (edge_features.cols() == 0) throw ValidationError("pdn_edge_weights: edge feature length must be positive");
  if (edge_features.rows() != g.num_edges()) {
    throw ContractError("pdn_edge_weights: " + std::to_string(edge_features.rows()) + " edge feature rows for " +
                        std::to_string(g.num_edges()) + " edges");
  }
  if (edge_map.size() != edge_features.cols()) {
    throw ContractError("pdn_edge_weights: edge map has length " + std::to_string(edge_map.size()) +
                        ", edge features have " + std::to_string(edge_features.cols()));
  }
  memory::tracked_vector<float> w(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    double z = bias;
    const auto row = edge_features.row(e);
    for (std::size_t k = 0; k < row.size(); ++k) z += static_cast<double>(edge_map[k]) * row[k];
    w[e] = static_cast<float>(1.0 / (1.0 + std::exp(-z)));
  }
  return w;
}

LayerOutput forward_layer(const LayerSpec& spec, const LayerGraph& g, const FeatureMatrix& x,
                          const LayerParams& params, const ExecPolicy& policy) {
  validate(spec);
  if (x.cols() != spec.in_dim) {
    throw ContractError("forward_layer: features have " + std::to_string(x.cols()) + " columns, layer expects " +
                        std::to_string(spec.in_dim));
  }
  if (params.weight.in_dim != spec.in_dim || params.weight.out_dim != spec.out_dim) {
    throw ContractError("forward_layer: weight shape does not match the layer dimensions");
  }

  switch (spec.model) {
    case Model::gcn: {
      const auto h = matmul(x, params.weight, policy);
      const auto w = gcn_normalization(g.coo);
      auto agg = aggregate(g, h, spec.abstraction, spec.op, w, policy);
      return {std::move(agg.features), agg.counters};
    }
    case Model::gin: {
      auto agg = gin_aggregate(g, x, spec.gin_epsilon, spec.abstraction, policy);
      return {matmul(agg.features, params.weight, policy), agg.counters};
    }
    case Model::gat: {
      const auto h = matmul(x, params.weight, policy);
      const auto alpha = gat_edge_weights(g.coo, h, params.attention_src, params.attention_dst);
      auto agg = aggregate(g, h, spec.abstraction, spec.op, alpha, policy);
      return {std::move(agg.features), agg.counters};
    }
    case Model::pdn: {
      if (!g.edge_features) throw ContractError("forward_layer: pdn needs edge features");
      const auto h = matmul(x, params.weight, policy);
      const auto w = pdn_edge_weights(g.coo, *g.edge_features, params.edge_map, params.edge_bias);
      auto agg = aggregate(g, h, spec.abstraction, spec.op, w, policy);
      return {std::move(agg.features), agg.counters};
    }
  }
  throw UsageError("unknown model");
}

LayerOutput forward_layer(const LayerSpec& spec, const CooGraph& g, const FeatureMatrix& x,
                          const LayerParams& params, const ExecPolicy& policy) {
  validate(spec);
  return forward_layer(spec, prepare_layer_graph(g, spec.model), x, params, policy);
}

}  // namespace aggr
