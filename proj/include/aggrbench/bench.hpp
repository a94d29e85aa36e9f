#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggrbench/aggregate.hpp"
#include "aggrbench/graph.hpp"
#include "aggrbench/layers.hpp"
#include "aggrbench/synth.hpp"

namespace aggr {

std::string_view version() noexcept;

struct EdgeListSource {
  std::filesystem::path path;
  bool symmetrize = false;
  std::optional<std::size_t> num_vertices;
};

/// An already-built graph and the name it is reported under.
struct InlineGraph {
  CooGraph graph;
  std::string label = "inline";
};

using GraphSource = std::variant<EdgeListSource, SynthSpec, InlineGraph>;

std::string describe(const GraphSource& source);
CooGraph load_graph(const GraphSource& source);

struct BenchConfig {
  GraphSource graph = SynthSpec{};
  LayerSpec layer;  // in_dim is taken from the features
  std::optional<std::filesystem::path> features_path;
  std::size_t feature_len = 32;  // random features when no file is given
  std::optional<std::filesystem::path> params_path;
  std::size_t repetitions = 300;
  std::size_t warmup = 10;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  std::size_t memory_limit_bytes = 0;  // 0: unlimited

  void validate() const;
};

struct SweepPoint {
  std::string property;
  double value = 0.0;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct TimingStats {
  std::vector<std::int64_t> samples_ns;
  double mean_ns = 0.0;
  double median_ns = 0.0;
  double stddev_ns = 0.0;  // sample standard deviation; 0 for one sample

  static TimingStats from_samples(std::vector<std::int64_t> samples);
  friend bool operator==(const TimingStats&, const TimingStats&) = default;
};

struct EnvironmentRecord {
  unsigned threads = 1;
  std::string precision = "fp32";
  std::string version;
  std::size_t warmup = 0;
  std::string trimming = "none";
  std::vector<std::string> assumptions;

  friend bool operator==(const EnvironmentRecord&, const EnvironmentRecord&) = default;
};

struct BenchReport {
  std::string graph;
  std::string model;
  std::string abstraction;
  std::string op;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;
  std::optional<SweepPoint> sweep;

  GraphStats graph_stats;
  CostCounters counters;
  std::size_t peak_aux_bytes = 0;
  std::size_t output_bytes = 0;
  std::uint64_t output_digest = 0;
  EnvironmentRecord environment;
  TimingStats timing;

  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Warmups (discarded) followed by `repetitions` timed forward passes. Each
/// pass is timed as a whole on a monotonic clock; the tracked-allocation peak
/// of a pass, output included, is its auxiliary memory.
BenchReport run_benchmark(const BenchConfig& cfg);

/// The abstractions compared by default: scatter, reduce and pull, minus
/// those the model does not support. `include_push` adds push.
std::vector<Abstraction> comparable_abstractions(Model model, bool include_push = false);

struct AbstractionComparison {
  std::vector<BenchReport> reports;
  std::vector<std::string> by_latency;  // fastest first
  std::vector<std::string> by_memory;   // smallest peak first
};

AbstractionComparison compare_abstractions(const BenchConfig& cfg, bool include_push = false);

enum class SweepProperty { density, exponent, rewire_p, feature_len };

std::string to_string(SweepProperty p);
SweepProperty parse_sweep_property(std::string_view s);

/// One report per value. Structural properties require a synthetic graph
/// source and switch it to the matching family.
std::vector<BenchReport> sweep(SweepProperty property, const std::vector<double>& values, const BenchConfig& base);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const BenchReport& r);
BenchReport report_from_json(const ordered_json& j);

/// The report without its timing block: identical across runs of the same
/// configuration with one thread.
ordered_json deterministic_payload(const BenchReport& r);

std::string csv_header();
std::string csv_row(const BenchReport& r);
void write_csv(std::ostream& out, const std::vector<BenchReport>& reports);

ordered_json to_json(const GraphStats& s);
ordered_json to_json(const CostCounters& c);

}  // namespace aggr
