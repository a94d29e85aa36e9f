#pragma once

// Shared fixtures for the test binaries: small hand-built graphs, seeded
// random generators for property tests, and a Cora-shaped dataset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "aggrbench/features.hpp"
#include "aggrbench/graph.hpp"
#include "aggrbench/random.hpp"

namespace testing {

using aggr::CooGraph;
using aggr::Edge;
using aggr::FeatureMatrix;

inline CooGraph triangle() {
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {2, 0}};
  return aggr::from_edge_list(e, 3);
}

inline CooGraph star_into_zero(std::size_t leaves = 4) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.push_back({static_cast<aggr::vertex_t>(i), 0});
  return aggr::from_edge_list(e, leaves + 1);
}

inline FeatureMatrix column(std::vector<float> v) { return FeatureMatrix(v.size(), 1, v); }

// Random multigraph: every ordered pair (self-loops included) is drawn
// independently with probability `density`, and a few duplicate edges are
// appended so multigraph semantics are exercised.
struct RandomGraphOptions {
  std::size_t max_vertices = 256;
  double max_density = 0.2;
  bool weighted = true;
  bool duplicates = true;
};

inline CooGraph random_graph(std::uint64_t seed, const RandomGraphOptions& opt = {}) {
  aggr::CounterRng rng(seed, 0xA11CE);
  const std::size_t n = 1 + rng.below(opt.max_vertices);
  const double density = opt.max_density * rng.uniform();
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (rng.uniform() < density) edges.push_back({static_cast<aggr::vertex_t>(u), static_cast<aggr::vertex_t>(v)});
    }
  }
  if (opt.duplicates && !edges.empty()) {
    const std::size_t extra = rng.below(1 + edges.size() / 10);
    for (std::size_t i = 0; i < extra; ++i) edges.push_back(edges[rng.below(edges.size())]);
  }
  // Shuffle so from_edge_list does real sorting work.
  for (std::size_t i = edges.size(); i > 1; --i) std::swap(edges[i - 1], edges[rng.below(i)]);
  std::optional<std::vector<float>> weights;
  if (opt.weighted) {
    weights.emplace(edges.size());
    for (auto& w : *weights) w = static_cast<float>(rng.uniform() * 4.0 - 2.0);
  }
  return aggr::from_edge_list(edges, n, std::move(weights));
}

// Random edge list of exactly `m` edges over `n` vertices, unsorted.
inline std::vector<Edge> random_edges(std::size_t n, std::size_t m, std::uint64_t seed) {
  aggr::CounterRng rng(seed, 0xED6E5);
  std::vector<Edge> edges(m);
  for (auto& e : edges) {
    e.src = static_cast<aggr::vertex_t>(rng.below(n));
    e.dst = static_cast<aggr::vertex_t>(rng.below(n));
  }
  return edges;
}

// k-regular directed graph: vertex v receives from v+1 .. v+k (mod n).
inline CooGraph circulant(std::size_t n, std::size_t k) {
  std::vector<Edge> edges;
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 1; j <= k; ++j) {
      edges.push_back({static_cast<aggr::vertex_t>((v + j) % n), static_cast<aggr::vertex_t>(v)});
    }
  }
  return aggr::from_edge_list(edges, n);
}

// Cora-shaped stand-in: 2708 vertices, 5278 distinct undirected pairs with a
// heavy-tailed degree profile (stored as 10556 directed edges) and sparse
// binary bag-of-words features of length 1433.
inline constexpr std::size_t kCoraVertices = 2708;
inline constexpr std::size_t kCoraPairs = 5278;
inline constexpr std::size_t kCoraEdges = 2 * kCoraPairs;
inline constexpr std::size_t kCoraFeatures = 1433;

inline CooGraph cora_like_graph() {
  std::vector<double> cumulative(kCoraVertices);
  double total = 0.0;
  for (std::size_t i = 0; i < kCoraVertices; ++i) {
    total += std::pow(static_cast<double>(i + 1), -0.6);
    cumulative[i] = total;
  }
  aggr::CounterRng rng(2708, 5278);
  auto pick = [&] {
    const double r = rng.uniform() * total;
    return static_cast<aggr::vertex_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
  };
  std::set<std::pair<aggr::vertex_t, aggr::vertex_t>> pairs;
  // A spanning path first so no vertex is isolated, then preferential pairs.
  for (std::size_t v = 1; v < kCoraVertices && pairs.size() < kCoraPairs; v += 2) {
    pairs.insert({static_cast<aggr::vertex_t>(v - 1), static_cast<aggr::vertex_t>(v)});
  }
  while (pairs.size() < kCoraPairs) {
    auto a = pick();
    auto b = static_cast<aggr::vertex_t>(rng.below(kCoraVertices));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    pairs.insert({a, b});
  }
  std::vector<Edge> edges;
  edges.reserve(kCoraEdges);
  for (const auto& [a, b] : pairs) {
    edges.push_back({a, b});
    edges.push_back({b, a});
  }
  return aggr::from_edge_list(edges, kCoraVertices);
}

inline FeatureMatrix cora_like_features() {
  FeatureMatrix x(kCoraVertices, kCoraFeatures);
  for (std::size_t r = 0; r < kCoraVertices; ++r) {
    aggr::CounterRng rng(1433, r);
    for (int i = 0; i < 18; ++i) x(r, rng.below(kCoraFeatures)) = 1.0f;
  }
  return x;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("aggrbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace testing
