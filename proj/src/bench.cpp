#include "aggrbench/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "aggrbench/error.hpp"
#include "aggrbench/memory.hpp"
#include "aggrbench/random.hpp"

#ifndef AGGRBENCH_VERSION
#define AGGRBENCH_VERSION "0.0.0"
#endif

namespace aggr {

namespace {

constexpr int kSchemaVersion = 1;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

std::string synth_label(const SynthSpec& s) {
  std::ostringstream os;
  switch (s.family) {
    case Family::erdos_renyi:
      os << "er(n=" << s.num_vertices << ",density=" << format_double(s.density);
      break;
    case Family::chung_lu_powerlaw:
      os << "powerlaw(n=" << s.num_vertices << ",exponent=" << format_double(s.exponent)
         << ",mean_degree=" << format_double(s.mean_degree);
      break;
    case Family::watts_strogatz:
      os << "ws(n=" << s.num_vertices << ",k=" << s.ring_degree << ",p=" << format_double(s.rewire_p);
      break;
  }
  os << ",seed=" << s.seed << ")";
  return os.str();
}

// Edge features for models that consume them; seeded independently of X.
std::optional<FeatureMatrix> edge_features_for(const LayerSpec& spec, std::size_t num_edges, std::uint64_t seed) {
  if (spec.model != Model::pdn) return std::nullopt;
  return random_features(num_edges, spec.edge_feature_len, mix64(seed ^ 0xED6Eull));
}

}  // namespace

std::string_view version() noexcept { return AGGRBENCH_VERSION; }

std::string describe(const GraphSource& source) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EdgeListSource>) {
          return s.path.string() + (s.symmetrize ? " (symmetrized)" : "");
        } else if constexpr (std::is_same_v<T, SynthSpec>) {
          return synth_label(s);
        } else {
          return s.label;
        }
      },
      source);
}

CooGraph load_graph(const GraphSource& source) {
  return std::visit(
      [](const auto& s) -> CooGraph {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EdgeListSource>) {
          auto g = read_edge_list(s.path, EdgeListOptions{s.num_vertices});
          return s.symmetrize ? symmetrize(g) : g;
        } else if constexpr (std::is_same_v<T, SynthSpec>) {
          return generate(s);
        } else {
          return s.graph.sorted_by == EdgeOrder::source ? s.graph : sort_by_source(s.graph);
        }
      },
      source);
}

void BenchConfig::validate() const {
  if (repetitions < 1) throw UsageError("repetitions must be at least 1");
  if (layer.out_dim == 0) throw UsageError("output dimension must be positive");
  if (!features_path && feature_len == 0) throw UsageError("feature length must be positive");
  LayerSpec probe = layer;
  probe.in_dim = std::max<std::size_t>(probe.in_dim, 1);
  aggr::validate(probe);
  if (const auto* synth = std::get_if<SynthSpec>(&graph)) synth->validate();
}

TimingStats TimingStats::from_samples(std::vector<std::int64_t> samples) {
  TimingStats t;
  t.samples_ns = std::move(samples);
  const auto n = t.samples_ns.size();
  if (n == 0) return t;
  double sum = 0.0;
  for (auto s : t.samples_ns) sum += static_cast<double>(s);
  t.mean_ns = sum / static_cast<double>(n);

  std::vector<std::int64_t> sorted = t.samples_ns;
  std::sort(sorted.begin(), sorted.end());
  t.median_ns = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                           : 0.5 * (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2]));
  if (n > 1) {
    double ss = 0.0;
    for (auto s : t.samples_ns) {
      const double d = static_cast<double>(s) - t.mean_ns;
      ss += d * d;
    }
    t.stddev_ns = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return t;
}

BenchReport run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  const CooGraph g = load_graph(cfg.graph);

  FeatureMatrix x = cfg.features_path ? read_features(*cfg.features_path)
                                      : random_features(g.num_vertices, cfg.feature_len, cfg.seed);
  if (x.rows() != g.num_vertices) {
    throw ValidationError("features have " + std::to_string(x.rows()) + " rows but the graph has " +
                          std::to_string(g.num_vertices) + " vertices");
  }

  LayerSpec spec = cfg.layer;
  spec.in_dim = x.cols();
  validate(spec);
  const LayerParams params =
      cfg.params_path ? load_layer_params(*cfg.params_path) : LayerParams::random(spec, mix64(cfg.seed + 1));
  const LayerGraph lg = prepare_layer_graph(g, spec.model, edge_features_for(spec, g.num_edges(), cfg.seed));
  const ExecPolicy policy{cfg.threads};

  BenchReport r;
  r.graph = describe(cfg.graph);
  r.model = to_string(spec.model);
  r.abstraction = to_string(spec.abstraction);
  r.op = to_string(spec.op);
  r.in_dim = spec.in_dim;
  r.out_dim = spec.out_dim;
  r.repetitions = cfg.repetitions;
  r.seed = cfg.seed;
  r.graph_stats = compute_stats(g);

  r.environment.threads = cfg.threads;
  r.environment.version = std::string(version());
  r.environment.warmup = cfg.warmup;
  r.environment.assumptions.push_back("warmup runs are discarded; samples are not trimmed");
  if (const auto* synth = std::get_if<SynthSpec>(&cfg.graph); synth && synth->family == Family::chung_lu_powerlaw) {
    r.environment.assumptions.push_back("power-law mean degree is an assumed parameter (" +
                                        format_double(synth->mean_degree) + ")");
  }

  std::optional<memory::LimitGuard> limit;
  if (cfg.memory_limit_bytes) limit.emplace(memory::Tracker::global().current() + cfg.memory_limit_bytes);

  for (std::size_t i = 0; i < cfg.warmup; ++i) {
    auto out = forward_layer(spec, lg, x, params, policy);
    (void)out;
  }

  std::vector<std::int64_t> samples;
  samples.reserve(cfg.repetitions);
  for (std::size_t i = 0; i < cfg.repetitions; ++i) {
    memory::PeakScope scope;
    const auto t0 = std::chrono::steady_clock::now();
    auto out = forward_layer(spec, lg, x, params, policy);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    r.peak_aux_bytes = std::max(r.peak_aux_bytes, scope.peak_bytes());
    if (i + 1 == cfg.repetitions) {
      r.counters = out.counters;
      r.output_bytes = out.features.bytes();
      r.output_digest = digest(out.features);
    }
  }
  r.timing = TimingStats::from_samples(std::move(samples));
  return r;
}

std::vector<Abstraction> comparable_abstractions(Model model, bool include_push) {
  std::vector<Abstraction> out;
  for (auto a : {Abstraction::scatter, Abstraction::reduce, Abstraction::pull, Abstraction::push}) {
    if (a == Abstraction::push && !include_push) continue;
    if (supports(model, a)) out.push_back(a);
  }
  return out;
}

AbstractionComparison compare_abstractions(const BenchConfig& cfg, bool include_push) {
  AbstractionComparison cmp;
  for (auto a : comparable_abstractions(cfg.layer.model, include_push)) {
    BenchConfig c = cfg;
    c.layer.abstraction = a;
    cmp.reports.push_back(run_benchmark(c));
  }
  std::vector<std::size_t> idx(cmp.reports.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto ranked = [&](auto key) {
    auto order = idx;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key(cmp.reports[a]) < key(cmp.reports[b]); });
    std::vector<std::string> names;
    for (auto i : order) names.push_back(cmp.reports[i].abstraction);
    return names;
  };
  cmp.by_latency = ranked([](const BenchReport& r) { return r.timing.mean_ns; });
  cmp.by_memory = ranked([](const BenchReport& r) { return static_cast<double>(r.peak_aux_bytes); });
  return cmp;
}

std::string to_string(SweepProperty p) {
  switch (p) {
    case SweepProperty::density: return "density";
    case SweepProperty::exponent: return "exponent";
    case SweepProperty::rewire_p: return "rewire_p";
    case SweepProperty::feature_len: return "feature_len";
  }
  return "?";
}

SweepProperty parse_sweep_property(std::string_view s) {
  if (s == "density") return SweepProperty::density;
  if (s == "exponent") return SweepProperty::exponent;
  if (s == "rewire_p" || s == "p") return SweepProperty::rewire_p;
  if (s == "feature_len") return SweepProperty::feature_len;
  throw UsageError("unknown sweep property `" + std::string(s) + "` (expected density, exponent, rewire_p or feature_len)");
}

std::vector<BenchReport> sweep(SweepProperty property, const std::vector<double>& values, const BenchConfig& base) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  std::vector<BenchReport> reports;
  for (double v : values) {
    BenchConfig cfg = base;
    if (property == SweepProperty::feature_len) {
      if (cfg.features_path) throw UsageError("a feature_len sweep uses random features; drop the feature file");
      if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("feature_len values must be positive integers");
      cfg.feature_len = static_cast<std::size_t>(v);
    } else {
      auto* synth = std::get_if<SynthSpec>(&cfg.graph);
      if (!synth) throw UsageError("a " + to_string(property) + " sweep needs a synthetic graph source");
      switch (property) {
        case SweepProperty::density:
          synth->family = Family::erdos_renyi;
          synth->density = v;
          break;
        case SweepProperty::exponent:
          synth->family = Family::chung_lu_powerlaw;
          synth->exponent = v;
          break;
        case SweepProperty::rewire_p:
          synth->family = Family::watts_strogatz;
          synth->rewire_p = v;
          break;
        case SweepProperty::feature_len: break;
      }
    }
    auto r = run_benchmark(cfg);
    r.sweep = SweepPoint{to_string(property), v};
    reports.push_back(std::move(r));
  }
  return reports;
}

// ---------------------------------------------------------------------------

ordered_json to_json(const GraphStats& s) {
  ordered_json j;
  j["num_vertices"] = s.num_vertices;
  j["num_edges"] = s.num_edges;
  j["density"] = s.density;
  j["max_in_degree"] = s.max_in_degree;
  j["mean_in_degree"] = s.mean_in_degree;
  j["load_imbalance"] = s.load_imbalance;
  j["powerlaw_exponent_mle"] = s.powerlaw_exponent_mle ? ordered_json(*s.powerlaw_exponent_mle) : ordered_json();
  j["powerlaw_dmin"] = s.powerlaw_dmin ? ordered_json(*s.powerlaw_dmin) : ordered_json();
  j["global_clustering_coefficient"] = s.global_clustering_coefficient;
  return j;
}

ordered_json to_json(const CostCounters& c) {
  ordered_json j;
  j["messages_materialized"] = c.messages_materialized;
  j["feature_reads"] = c.feature_reads;
  j["feature_writes"] = c.feature_writes;
  j["partial_sum_elements"] = c.partial_sum_elements;
  j["edges_traversed"] = c.edges_traversed;
  return j;
}

namespace {

GraphStats stats_from_json(const ordered_json& j) {
  GraphStats s;
  s.num_vertices = j.at("num_vertices").get<std::size_t>();
  s.num_edges = j.at("num_edges").get<std::size_t>();
  s.density = j.at("density").get<double>();
  s.max_in_degree = j.at("max_in_degree").get<std::size_t>();
  s.mean_in_degree = j.at("mean_in_degree").get<double>();
  s.load_imbalance = j.at("load_imbalance").get<double>();
  if (!j.at("powerlaw_exponent_mle").is_null()) s.powerlaw_exponent_mle = j.at("powerlaw_exponent_mle").get<double>();
  if (!j.at("powerlaw_dmin").is_null()) s.powerlaw_dmin = j.at("powerlaw_dmin").get<std::size_t>();
  s.global_clustering_coefficient = j.at("global_clustering_coefficient").get<double>();
  return s;
}

CostCounters counters_from_json(const ordered_json& j) {
  CostCounters c;
  c.messages_materialized = j.at("messages_materialized").get<std::uint64_t>();
  c.feature_reads = j.at("feature_reads").get<std::uint64_t>();
  c.feature_writes = j.at("feature_writes").get<std::uint64_t>();
  c.partial_sum_elements = j.at("partial_sum_elements").get<std::uint64_t>();
  c.edges_traversed = j.at("edges_traversed").get<std::uint64_t>();
  return c;
}

}  // namespace

ordered_json deterministic_payload(const BenchReport& r) {
  ordered_json j;
  j["schema"] = kSchemaVersion;

  ordered_json config;
  config["graph"] = r.graph;
  config["model"] = r.model;
  config["abstraction"] = r.abstraction;
  config["op"] = r.op;
  config["in_dim"] = r.in_dim;
  config["out_dim"] = r.out_dim;
  config["repetitions"] = r.repetitions;
  config["seed"] = r.seed;
  if (r.sweep) {
    config["sweep"] = ordered_json{{"property", r.sweep->property}, {"value", r.sweep->value}};
  } else {
    config["sweep"] = nullptr;
  }
  j["config"] = std::move(config);

  j["graph_stats"] = to_json(r.graph_stats);
  j["counters"] = to_json(r.counters);
  j["memory"] = ordered_json{{"peak_aux_bytes", r.peak_aux_bytes}, {"output_bytes", r.output_bytes}};
  j["output_digest"] = hex64(r.output_digest);

  ordered_json env;
  env["threads"] = r.environment.threads;
  env["precision"] = r.environment.precision;
  env["version"] = r.environment.version;
  env["warmup"] = r.environment.warmup;
  env["trimming"] = r.environment.trimming;
  env["assumptions"] = r.environment.assumptions;
  j["environment"] = std::move(env);
  return j;
}

ordered_json to_json(const BenchReport& r) {
  auto j = deterministic_payload(r);
  ordered_json timing;
  timing["mean_ns"] = r.timing.mean_ns;
  timing["median_ns"] = r.timing.median_ns;
  timing["stddev_ns"] = r.timing.stddev_ns;
  timing["samples_ns"] = r.timing.samples_ns;
  j["timing"] = std::move(timing);
  return j;
}

BenchReport report_from_json(const ordered_json& j) {
  if (j.at("schema").get<int>() != kSchemaVersion) throw ValidationError("unsupported report schema");
  BenchReport r;
  const auto& c = j.at("config");
  r.graph = c.at("graph").get<std::string>();
  r.model = c.at("model").get<std::string>();
  r.abstraction = c.at("abstraction").get<std::string>();
  r.op = c.at("op").get<std::string>();
  r.in_dim = c.at("in_dim").get<std::size_t>();
  r.out_dim = c.at("out_dim").get<std::size_t>();
  r.repetitions = c.at("repetitions").get<std::size_t>();
  r.seed = c.at("seed").get<std::uint64_t>();
  if (!c.at("sweep").is_null()) {
    r.sweep = SweepPoint{c.at("sweep").at("property").get<std::string>(), c.at("sweep").at("value").get<double>()};
  }
  r.graph_stats = stats_from_json(j.at("graph_stats"));
  r.counters = counters_from_json(j.at("counters"));
  r.peak_aux_bytes = j.at("memory").at("peak_aux_bytes").get<std::size_t>();
  r.output_bytes = j.at("memory").at("output_bytes").get<std::size_t>();
  r.output_digest = parse_hex64(j.at("output_digest").get<std::string>());

  const auto& env = j.at("environment");
  r.environment.threads = env.at("threads").get<unsigned>();
  r.environment.precision = env.at("precision").get<std::string>();
  r.environment.version = env.at("version").get<std::string>();
  r.environment.warmup = env.at("warmup").get<std::size_t>();
  r.environment.trimming = env.at("trimming").get<std::string>();
  r.environment.assumptions = env.at("assumptions").get<std::vector<std::string>>();

  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    r.timing.mean_ns = t.at("mean_ns").get<double>();
    r.timing.median_ns = t.at("median_ns").get<double>();
    r.timing.stddev_ns = t.at("stddev_ns").get<double>();
    r.timing.samples_ns = t.at("samples_ns").get<std::vector<std::int64_t>>();
  }
  return r;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <class T>
std::string opt_str(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*v);
  } else {
    return std::to_string(*v);
  }
}

}  // namespace

std::string csv_header() {
  return "graph,model,abstraction,op,in_dim,out_dim,repetitions,seed,threads,sweep_property,sweep_value,"
         "num_vertices,num_edges,density,max_in_degree,mean_in_degree,load_imbalance,powerlaw_exponent_mle,"
         "powerlaw_dmin,global_clustering_coefficient,"
         "messages_materialized,feature_reads,feature_writes,partial_sum_elements,edges_traversed,"
         "peak_aux_bytes,output_bytes,output_digest,mean_ns,median_ns,stddev_ns";
}

std::string csv_row(const BenchReport& r) {
  std::ostringstream os;
  const auto& s = r.graph_stats;
  const auto& c = r.counters;
  os << csv_escape(r.graph) << ',' << r.model << ',' << r.abstraction << ',' << r.op << ',' << r.in_dim << ','
     << r.out_dim << ',' << r.repetitions << ',' << r.seed << ',' << r.environment.threads << ','
     << (r.sweep ? r.sweep->property : "") << ',' << (r.sweep ? format_double(r.sweep->value) : "") << ','
     << s.num_vertices << ',' << s.num_edges << ',' << format_double(s.density) << ',' << s.max_in_degree << ','
     << format_double(s.mean_in_degree) << ',' << format_double(s.load_imbalance) << ','
     << opt_str(s.powerlaw_exponent_mle) << ',' << opt_str(s.powerlaw_dmin) << ','
     << format_double(s.global_clustering_coefficient) << ',' << c.messages_materialized << ','
     << c.feature_reads << ',' << c.feature_writes << ',' << c.partial_sum_elements << ',' << c.edges_traversed
     << ',' << r.peak_aux_bytes << ',' << r.output_bytes << ',' << hex64(r.output_digest) << ','
     << format_double(r.timing.mean_ns) << ',' << format_double(r.timing.median_ns) << ','
     << format_double(r.timing.stddev_ns);
  return os.str();
}

void write_csv(std::ostream& out, const std::vector<BenchReport>& reports) {
  out << csv_header() << '\n';
  for (const auto& r : reports) out << csv_row(r) << '\n';
}

}  // namespace aggr
