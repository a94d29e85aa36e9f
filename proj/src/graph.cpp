#include "aggrbench/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

#include "aggrbench/error.hpp"

namespace aggr {

namespace {

template <class Key>
std::vector<std::size_t> stable_counting_sort(std::span<const std::size_t> order, std::size_t buckets,
                                              Key&& key) {
  std::vector<std::size_t> counts(buckets + 1, 0);
  for (auto e : order) ++counts[key(e) + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  std::vector<std::size_t> out(order.size());
  for (auto e : order) out[counts[key(e)]++] = e;
  return out;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

void validate_compressed(const char* kind, std::size_t n, const std::vector<std::size_t>& ptr,
                         const std::vector<vertex_t>& idx, const std::optional<std::vector<float>>& weights) {
  auto fail = [&](const std::string& what) { throw ValidationError(std::string(kind) + ": " + what); };
  if (ptr.size() != n + 1) {
    fail("offset array has length " + std::to_string(ptr.size()) + ", expected " + std::to_string(n + 1));
  }
  if (ptr.front() != 0) fail("first offset is " + std::to_string(ptr.front()) + ", expected 0");
  for (std::size_t i = 0; i < n; ++i) {
    if (ptr[i + 1] < ptr[i]) fail("offsets decrease at position " + std::to_string(i + 1));
  }
  if (ptr.back() != idx.size()) {
    fail("last offset is " + std::to_string(ptr.back()) + " but there are " + std::to_string(idx.size()) +
         " entries");
  }
  for (std::size_t e = 0; e < idx.size(); ++e) {
    if (idx[e] >= n) fail("entry " + std::to_string(e) + " has vertex id " + std::to_string(idx[e]) + " >= " +
                          std::to_string(n));
  }
  if (weights && weights->size() != idx.size()) fail("weights length does not match entry count");
}

std::optional<std::vector<float>> permute_weights(const std::optional<std::vector<float>>& w,
                                                  std::span<const std::size_t> order) {
  if (!w) return std::nullopt;
  std::vector<float> out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = (*w)[order[i]];
  return out;
}

}  // namespace

std::string to_string(EdgeOrder order) {
  switch (order) {
    case EdgeOrder::source: return "source";
    case EdgeOrder::destination: return "destination";
    case EdgeOrder::unsorted: break;
  }
  return "unsorted";
}

void CooGraph::validate() const {
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].src >= num_vertices || edges[e].dst >= num_vertices) {
      throw ValidationError("coo: edge " + std::to_string(e) + " (" + std::to_string(edges[e].src) + ", " +
                            std::to_string(edges[e].dst) + ") is out of range for " +
                            std::to_string(num_vertices) + " vertices");
    }
  }
  if (weights && weights->size() != edges.size()) {
    throw ValidationError("coo: weights length " + std::to_string(weights->size()) + " does not match " +
                          std::to_string(edges.size()) + " edges");
  }
  if (sorted_by == EdgeOrder::source) {
    for (std::size_t e = 1; e < edges.size(); ++e) {
      if (edges[e].src < edges[e - 1].src) {
        throw ValidationError("coo: flagged source-sorted but edge " + std::to_string(e) + " breaks the order");
      }
    }
  } else if (sorted_by == EdgeOrder::destination) {
    for (std::size_t e = 1; e < edges.size(); ++e) {
      if (edges[e].dst < edges[e - 1].dst) {
        throw ValidationError("coo: flagged destination-sorted but edge " + std::to_string(e) +
                              " breaks the order");
      }
    }
  }
}

void CsrGraph::validate() const { validate_compressed("csr", num_vertices, row_ptr, col_idx, weights); }
void CscGraph::validate() const { validate_compressed("csc", num_vertices, col_ptr, row_idx, weights); }

CooGraph from_edge_list(std::span<const Edge> edges, std::size_t num_vertices,
                        std::optional<std::vector<float>> weights) {
  CooGraph g;
  g.num_vertices = num_vertices;
  g.edges.assign(edges.begin(), edges.end());
  g.weights = std::move(weights);
  g.validate();
  return sort_by_source(std::move(g));
}

CooGraph sort_by_source(CooGraph g) {
  const auto n = g.num_vertices;
  auto by_dst = stable_counting_sort(identity_order(g.num_edges()), n, [&](std::size_t e) { return g.edges[e].dst; });
  auto order = stable_counting_sort(by_dst, n, [&](std::size_t e) { return g.edges[e].src; });

  CooGraph out;
  out.num_vertices = n;
  out.edges.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.edges[i] = g.edges[order[i]];
  out.weights = permute_weights(g.weights, order);
  out.sorted_by = EdgeOrder::source;
  return out;
}

std::vector<std::size_t> csr_entry_order(const CooGraph& g) {
  const auto n = g.num_vertices;
  auto order = identity_order(g.num_edges());
  if (g.sorted_by != EdgeOrder::source) {
    order = stable_counting_sort(order, n, [&](std::size_t e) { return g.edges[e].src; });
  }
  return stable_counting_sort(order, n, [&](std::size_t e) { return g.edges[e].dst; });
}

std::vector<std::size_t> csc_entry_order(const CooGraph& g) {
  const auto n = g.num_vertices;
  auto order = stable_counting_sort(identity_order(g.num_edges()), n, [&](std::size_t e) { return g.edges[e].dst; });
  return stable_counting_sort(order, n, [&](std::size_t e) { return g.edges[e].src; });
}

CsrGraph coo_to_csr(const CooGraph& g) {
  g.validate();
  const auto order = csr_entry_order(g);
  CsrGraph out;
  out.num_vertices = g.num_vertices;
  out.row_ptr.assign(g.num_vertices + 1, 0);
  out.col_idx.resize(order.size());
  for (const auto& e : g.edges) ++out.row_ptr[e.dst + 1];
  std::partial_sum(out.row_ptr.begin(), out.row_ptr.end(), out.row_ptr.begin());
  for (std::size_t i = 0; i < order.size(); ++i) out.col_idx[i] = g.edges[order[i]].src;
  out.weights = permute_weights(g.weights, order);
  return out;
}

CscGraph coo_to_csc(const CooGraph& g) {
  g.validate();
  const auto order = csc_entry_order(g);
  CscGraph out;
  out.num_vertices = g.num_vertices;
  out.col_ptr.assign(g.num_vertices + 1, 0);
  out.row_idx.resize(order.size());
  for (const auto& e : g.edges) ++out.col_ptr[e.src + 1];
  std::partial_sum(out.col_ptr.begin(), out.col_ptr.end(), out.col_ptr.begin());
  for (std::size_t i = 0; i < order.size(); ++i) out.row_idx[i] = g.edges[order[i]].dst;
  out.weights = permute_weights(g.weights, order);
  return out;
}

CooGraph csr_to_coo(const CsrGraph& g) {
  g.validate();
  CooGraph out;
  out.num_vertices = g.num_vertices;
  out.edges.reserve(g.num_edges());
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    for (auto e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
      out.edges.push_back({g.col_idx[e], static_cast<vertex_t>(v)});
    }
  }
  out.weights = g.weights;
  out.sorted_by = EdgeOrder::destination;
  return sort_by_source(std::move(out));
}

CooGraph csc_to_coo(const CscGraph& g) {
  g.validate();
  CooGraph out;
  out.num_vertices = g.num_vertices;
  out.edges.reserve(g.num_edges());
  for (std::size_t u = 0; u < g.num_vertices; ++u) {
    for (auto e = g.col_ptr[u]; e < g.col_ptr[u + 1]; ++e) {
      out.edges.push_back({static_cast<vertex_t>(u), g.row_idx[e]});
    }
  }
  out.weights = g.weights;
  out.sorted_by = EdgeOrder::source;
  return out;
}

CooGraph symmetrize(const CooGraph& g) {
  g.validate();
  std::vector<std::pair<Edge, std::size_t>> all;
  all.reserve(2 * g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    all.push_back({g.edges[e], e});
    all.push_back({{g.edges[e].dst, g.edges[e].src}, e});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  all.erase(std::unique(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
            all.end());

  CooGraph out;
  out.num_vertices = g.num_vertices;
  out.edges.reserve(all.size());
  for (const auto& [edge, _] : all) out.edges.push_back(edge);
  if (g.weights) {
    out.weights.emplace();
    out.weights->reserve(all.size());
    for (const auto& [_, origin] : all) out.weights->push_back((*g.weights)[origin]);
  }
  out.sorted_by = EdgeOrder::source;
  return out;
}

std::vector<std::size_t> in_degrees(const CooGraph& g) {
  std::vector<std::size_t> deg(g.num_vertices, 0);
  for (const auto& e : g.edges) ++deg[e.dst];
  return deg;
}

std::optional<double> powerlaw_mle(std::span<const std::size_t> degrees, std::size_t d_min,
                                   std::size_t min_samples) {
  if (d_min < 1) return std::nullopt;
  const double shift = static_cast<double>(d_min) - 0.5;
  std::size_t count = 0;
  double log_sum = 0.0;
  for (auto d : degrees) {
    if (d >= d_min) {
      ++count;
      log_sum += std::log(static_cast<double>(d) / shift);
    }
  }
  if (count < min_samples || !(log_sum > 0.0)) return std::nullopt;
  return 1.0 + static_cast<double>(count) / log_sum;
}

std::optional<PowerlawFit> fit_powerlaw(std::span<const std::size_t> degrees, std::size_t min_dmin,
                                        std::size_t min_samples) {
  std::vector<std::size_t> sorted;
  sorted.reserve(degrees.size());
  for (auto d : degrees) {
    if (d >= std::max<std::size_t>(min_dmin, 1)) sorted.push_back(d);
  }
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < min_samples) return std::nullopt;

  std::vector<std::size_t> candidates(sorted.begin(), sorted.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::optional<PowerlawFit> best;
  std::size_t begin = 0;
  for (auto d_min : candidates) {
    while (begin < sorted.size() && sorted[begin] < d_min) ++begin;
    const std::size_t count = sorted.size() - begin;
    if (count < min_samples) break;
    const std::span<const std::size_t> tail(sorted.data() + begin, count);
    const auto alpha = powerlaw_mle(tail, d_min, min_samples);
    if (!alpha) continue;

    // KS distance between the empirical tail CDF and the continuous-approximation
    // model CDF, 1 - ((d + 0.5) / (d_min - 0.5))^(1 - alpha), evaluated at each
    // distinct degree.
    const double shift = static_cast<double>(d_min) - 0.5;
    double ks = 0.0;
    std::size_t i = 0;
    while (i < count) {
      std::size_t j = i;
      while (j < count && tail[j] == tail[i]) ++j;
      const double empirical = static_cast<double>(j) / static_cast<double>(count);
      const double model = 1.0 - std::pow((static_cast<double>(tail[i]) + 0.5) / shift, 1.0 - *alpha);
      ks = std::max(ks, std::abs(empirical - model));
      i = j;
    }
    if (!best || ks < best->ks_distance) best = PowerlawFit{*alpha, d_min, ks};
  }
  return best;
}

double global_clustering(const CooGraph& g) {
  const auto n = g.num_vertices;
  std::vector<Edge> pairs;
  pairs.reserve(g.num_edges());
  for (const auto& e : g.edges) {
    if (e.src == e.dst) continue;
    pairs.push_back({std::min(e.src, e.dst), std::max(e.src, e.dst)});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<std::size_t> degree(n, 0);
  for (const auto& p : pairs) {
    ++degree[p.src];
    ++degree[p.dst];
  }
  double triples = 0.0;
  for (auto d : degree) triples += 0.5 * static_cast<double>(d) * static_cast<double>(d > 0 ? d - 1 : 0);
  if (triples == 0.0) return 0.0;

  // Orient each edge toward the endpoint of higher (degree, id) rank so every
  // triangle is counted exactly once.
  auto before = [&](vertex_t a, vertex_t b) {
    return degree[a] < degree[b] || (degree[a] == degree[b] && a < b);
  };
  std::vector<std::size_t> ptr(n + 1, 0);
  for (const auto& p : pairs) ++ptr[(before(p.src, p.dst) ? p.src : p.dst) + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<vertex_t> out(pairs.size());
  {
    auto fill = ptr;
    for (const auto& p : pairs) {
      const bool forward = before(p.src, p.dst);
      out[fill[forward ? p.src : p.dst]++] = forward ? p.dst : p.src;
    }
  }

  std::vector<std::uint8_t> mark(n, 0);
  std::uint64_t triangles = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (auto e = ptr[u]; e < ptr[u + 1]; ++e) mark[out[e]] = 1;
    for (auto e = ptr[u]; e < ptr[u + 1]; ++e) {
      const auto v = out[e];
      for (auto f = ptr[v]; f < ptr[v + 1]; ++f) triangles += mark[out[f]];
    }
    for (auto e = ptr[u]; e < ptr[u + 1]; ++e) mark[out[e]] = 0;
  }
  return 3.0 * static_cast<double>(triangles) / triples;
}

GraphStats compute_stats(const CooGraph& g) {
  g.validate();
  GraphStats s;
  s.num_vertices = g.num_vertices;
  s.num_edges = g.num_edges();
  const double n = static_cast<double>(g.num_vertices);
  const double e = static_cast<double>(g.num_edges());
  s.density = g.num_vertices > 1 ? e / (n * (n - 1.0)) : 0.0;

  const auto deg = in_degrees(g);
  s.max_in_degree = deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
  s.mean_in_degree = g.num_vertices > 0 ? e / n : 0.0;
  s.load_imbalance = s.num_edges > 0 ? static_cast<double>(s.max_in_degree) / s.mean_in_degree : 0.0;

  if (auto fit = fit_powerlaw(deg)) {
    s.powerlaw_exponent_mle = fit->alpha;
    s.powerlaw_dmin = fit->d_min;
  }
  s.global_clustering_coefficient = global_clustering(g);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const auto b = i;
    while (i < s.size() && !(s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

constexpr std::string_view kVertexDirective = "vertices:";

}  // namespace

CooGraph read_edge_list(std::istream& in, const EdgeListOptions& opts) {
  std::vector<Edge> edges;
  std::vector<float> weights;
  std::optional<bool> weighted;
  std::optional<std::size_t> declared_vertices;
  std::size_t max_id = 0;
  bool any = false;

  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw ValidationError("edge list line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      auto rest = trim(body.substr(1));
      if (rest.starts_with(kVertexDirective)) {
        auto num = trim(rest.substr(kVertexDirective.size()));
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
        if (ec != std::errc{} || p != num.data() + num.size()) fail("malformed vertex-count directive");
        declared_vertices = n;
      }
      continue;
    }
    const auto tokens = split_ws(body);
    if (tokens.size() != 2 && tokens.size() != 3) {
      fail("expected `<source> <destination> [weight]`, got " + std::to_string(tokens.size()) + " fields");
    }
    const bool has_weight = tokens.size() == 3;
    if (weighted && *weighted != has_weight) fail("weight column present on some lines but not others");
    weighted = has_weight;

    std::uint64_t ids[2];
    for (int i = 0; i < 2; ++i) {
      auto [p, ec] = std::from_chars(tokens[i].data(), tokens[i].data() + tokens[i].size(), ids[i]);
      if (ec != std::errc{} || p != tokens[i].data() + tokens[i].size()) {
        fail("invalid vertex id `" + std::string(tokens[i]) + "`");
      }
      if (ids[i] >= std::numeric_limits<vertex_t>::max()) fail("vertex id too large");
    }
    if (has_weight) {
      float w = 0.0f;
      auto [p, ec] = std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), w);
      if (ec != std::errc{} || p != tokens[2].data() + tokens[2].size() || !std::isfinite(w)) {
        fail("invalid weight `" + std::string(tokens[2]) + "`");
      }
      weights.push_back(w);
    }
    if (opts.num_vertices && (ids[0] >= *opts.num_vertices || ids[1] >= *opts.num_vertices)) {
      fail("vertex id out of range for " + std::to_string(*opts.num_vertices) + " vertices");
    }
    edges.push_back({static_cast<vertex_t>(ids[0]), static_cast<vertex_t>(ids[1])});
    max_id = std::max<std::size_t>({max_id, ids[0], ids[1]});
    any = true;
  }
  if (in.bad()) throw IoError("failed while reading edge list");

  std::size_t n = any ? max_id + 1 : 0;
  if (opts.num_vertices) {
    n = *opts.num_vertices;
  } else if (declared_vertices) {
    if (*declared_vertices < n) {
      throw ValidationError("edge list declares " + std::to_string(*declared_vertices) +
                            " vertices but uses id " + std::to_string(max_id));
    }
    n = *declared_vertices;
  }
  std::optional<std::vector<float>> w;
  if (weighted.value_or(false)) w = std::move(weights);
  return from_edge_list(edges, n, std::move(w));
}

CooGraph read_edge_list(const std::filesystem::path& path, const EdgeListOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  return read_edge_list(in, opts);
}

void write_edge_list(std::ostream& out, const CooGraph& g) {
  g.validate();
  out << "# " << kVertexDirective << ' ' << g.num_vertices << '\n';
  char buf[64];
  std::string line;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    line.clear();
    line += std::to_string(g.edges[e].src);
    line += ' ';
    line += std::to_string(g.edges[e].dst);
    if (g.weights) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), (*g.weights)[e]);
      line += ' ';
      line.append(buf, p);
    }
    line += '\n';
    out << line;
  }
}

void write_edge_list(const std::filesystem::path& path, const CooGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write edge list " + path.string());
  write_edge_list(out, g);
  if (!out) throw IoError("failed while writing edge list " + path.string());
}

}  // namespace aggr
