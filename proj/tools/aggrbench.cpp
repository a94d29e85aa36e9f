// aggrbench: generate graphs, inspect them, verify the aggregation kernels
// against each other, and benchmark GNN layers across abstractions.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggrbench/aggregate.hpp"
#include "aggrbench/bench.hpp"
#include "aggrbench/error.hpp"
#include "aggrbench/graph.hpp"
#include "aggrbench/layers.hpp"
#include "aggrbench/random.hpp"
#include "aggrbench/synth.hpp"

namespace {

using aggr::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Largest vertex count for which verify builds the dense N x N reference.
constexpr std::size_t kDenseOracleLimit = 4096;
constexpr double kVerifyRtol = 1e-4;

struct GraphFlags {
  std::string path;
  std::string family;
  std::size_t n = 10000;
  double density = 0.01;
  double exponent = 2.5;
  double mean_degree = 20.0;
  std::size_t k = 10;
  double p = 0.1;
  std::uint64_t seed = 0;
  bool symmetrize = false;
  CLI::Option* n_option = nullptr;
};

struct RunFlags {
  std::string model = "gcn";
  std::string abstraction = "pull";
  std::string op = "add";
  std::size_t reps = 300;
  std::size_t warmup = 10;
  std::size_t out_dim = 8;
  std::size_t feature_len = 32;
  std::string features;
  std::string params;
  unsigned threads = 1;
  std::string format = "json";
  std::string output;
  bool include_push = false;
  std::size_t memory_limit = 0;
};

void add_graph_flags(CLI::App* cmd, GraphFlags& g, bool positional) {
  if (positional) cmd->add_option("graph", g.path, "Edge-list file (omit to generate with --family)");
  cmd->add_option("--family", g.family, "Synthetic family: er, powerlaw, ws");
  g.n_option = cmd->add_option("--n", g.n, "Vertex count (synthetic size, or override for a file)");
  cmd->add_option("--density", g.density, "Erdos-Renyi edge probability")->capture_default_str();
  cmd->add_option("--exponent", g.exponent, "Power-law exponent")->capture_default_str();
  cmd->add_option("--mean-degree", g.mean_degree, "Power-law target mean degree")->capture_default_str();
  cmd->add_option("--k", g.k, "Watts-Strogatz ring degree (even)")->capture_default_str();
  cmd->add_option("--p", g.p, "Watts-Strogatz rewiring probability")->capture_default_str();
  cmd->add_option("--seed", g.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--symmetrize", g.symmetrize, "Add the reverse of every edge");
}

void add_run_flags(CLI::App* cmd, RunFlags& r, bool with_abstraction) {
  cmd->add_option("--model", r.model, "gcn, gin, gat or pdn")->capture_default_str();
  if (with_abstraction) {
    cmd->add_option("--abstraction", r.abstraction, "scatter, reduce, pull, push, or all")->capture_default_str();
    cmd->add_flag("--include-push", r.include_push, "With --abstraction all, also run push");
  }
  cmd->add_option("--op", r.op, "Reduce operator: add, max, mean")->capture_default_str();
  cmd->add_option("--reps", r.reps, "Timed repetitions")->capture_default_str();
  cmd->add_option("--warmup", r.warmup, "Discarded warmup runs")->capture_default_str();
  cmd->add_option("--out-dim", r.out_dim, "Layer output dimension")->capture_default_str();
  cmd->add_option("--feature-len", r.feature_len, "Random input feature length")->capture_default_str();
  cmd->add_option("--features", r.features, "Feature file (binary or text)");
  cmd->add_option("--params", r.params, "Layer parameter manifest (key=path)");
  cmd->add_option("--threads", r.threads, "Kernel threads")->envname("AGGRBENCH_THREADS")->capture_default_str();
  cmd->add_option("--format", r.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  cmd->add_option("--memory-limit", r.memory_limit, "Auxiliary memory budget in bytes (0: unlimited)");
  cmd->add_option("-o", r.output, "Output file (default stdout)");
}

aggr::SynthSpec synth_spec(const GraphFlags& g) {
  aggr::SynthSpec s;
  s.family = aggr::parse_family(g.family);
  s.num_vertices = g.n;
  s.density = g.density;
  s.exponent = g.exponent;
  s.mean_degree = g.mean_degree;
  s.ring_degree = g.k;
  s.rewire_p = g.p;
  s.seed = g.seed;
  return s;
}

aggr::GraphSource graph_source(const GraphFlags& g) {
  if (!g.path.empty()) {
    aggr::EdgeListSource src{g.path, g.symmetrize, std::nullopt};
    if (g.n_option && g.n_option->count() > 0) src.num_vertices = g.n;
    return src;
  }
  if (g.family.empty()) throw aggr::UsageError("give an edge-list file or --family to generate a graph");
  return synth_spec(g);
}

ordered_json graph_flags_json(const GraphFlags& g) {
  ordered_json j;
  if (!g.path.empty()) {
    j["graph"] = g.path;
    j["symmetrize"] = g.symmetrize;
    if (g.n_option && g.n_option->count() > 0) j["n"] = g.n;
  } else {
    j["family"] = g.family.empty() ? "" : aggr::to_string(aggr::parse_family(g.family));
    j["n"] = g.n;
    j["density"] = g.density;
    j["exponent"] = g.exponent;
    j["mean_degree"] = g.mean_degree;
    j["k"] = g.k;
    j["p"] = g.p;
    j["seed"] = g.seed;
  }
  return j;
}

ordered_json run_flags_json(const RunFlags& r, bool with_abstraction) {
  ordered_json j;
  j["model"] = r.model;
  if (with_abstraction) j["abstraction"] = r.abstraction;
  j["op"] = r.op;
  j["reps"] = r.reps;
  j["warmup"] = r.warmup;
  j["out_dim"] = r.out_dim;
  j["feature_len"] = r.feature_len;
  j["features"] = r.features;
  j["params"] = r.params;
  j["threads"] = r.threads;
  j["format"] = r.format;
  j["memory_limit"] = r.memory_limit;
  j["output"] = r.output;
  return j;
}

void echo_config(const std::string& command, ordered_json config) {
  ordered_json j;
  j["command"] = command;
  j["config"] = std::move(config);
  std::cerr << "# config " << j.dump() << '\n';
}

aggr::BenchConfig bench_config(const GraphFlags& g, const RunFlags& r) {
  aggr::BenchConfig cfg;
  cfg.graph = graph_source(g);
  cfg.layer.model = aggr::parse_model(r.model);
  if (r.abstraction != "all") cfg.layer.abstraction = aggr::parse_abstraction(r.abstraction);
  cfg.layer.op = aggr::parse_reduce_op(r.op);
  cfg.layer.out_dim = r.out_dim;
  if (!r.features.empty()) cfg.features_path = r.features;
  cfg.feature_len = r.feature_len;
  if (!r.params.empty()) cfg.params_path = r.params;
  cfg.repetitions = r.reps;
  cfg.warmup = r.warmup;
  cfg.threads = r.threads;
  cfg.seed = g.seed;
  cfg.memory_limit_bytes = r.memory_limit;
  cfg.validate();
  return cfg;
}

// Writes to -o when given, else stdout.
template <class Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aggr::IoError("cannot write " + path);
  write(out);
  if (!out) throw aggr::IoError("failed while writing " + path);
}

void print_ranking(const aggr::AbstractionComparison& cmp) {
  std::cerr << "# ranking by mean latency (machine-dependent):";
  for (const auto& a : cmp.by_latency) std::cerr << ' ' << a;
  std::cerr << "\n# ranking by peak auxiliary memory:";
  for (const auto& a : cmp.by_memory) std::cerr << ' ' << a;
  std::cerr << '\n';
}

// ---------------------------------------------------------------------------

int cmd_gen(const GraphFlags& g, const std::string& output) {
  if (g.family.empty()) throw aggr::UsageError("gen needs --family");
  ordered_json cfg = graph_flags_json(g);
  cfg["output"] = output;
  echo_config("gen", cfg);
  const auto spec = synth_spec(g);
  const auto graph = aggr::generate(spec);
  const auto stats = aggr::to_json(aggr::compute_stats(graph));
  emit(output, [&](std::ostream& out) { aggr::write_edge_list(out, graph); });
  if (output.empty()) {
    std::cerr << stats.dump(2) << '\n';
  } else {
    emit(output + ".stats.json", [&](std::ostream& out) { out << stats.dump(2) << '\n'; });
  }
  return kExitOk;
}

int cmd_stats(const GraphFlags& g) {
  echo_config("stats", graph_flags_json(g));
  const auto graph = aggr::load_graph(graph_source(g));
  std::cout << aggr::to_json(aggr::compute_stats(graph)).dump(2) << '\n';
  return kExitOk;
}

int cmd_ingest(const GraphFlags& g, const std::string& features, const std::string& output) {
  if (g.path.empty()) throw aggr::UsageError("ingest needs an edge-list file");
  ordered_json cfg = graph_flags_json(g);
  cfg["features"] = features;
  cfg["output"] = output;
  echo_config("ingest", cfg);

  const auto graph = aggr::load_graph(graph_source(g));
  ordered_json j;
  j["vertices"] = graph.num_vertices;
  j["edges"] = graph.num_edges();
  j["weighted"] = graph.weighted();
  if (!features.empty()) {
    const auto x = aggr::read_features(features);
    if (x.rows() != graph.num_vertices) {
      throw aggr::ValidationError("feature file has " + std::to_string(x.rows()) + " rows but the graph has " +
                                  std::to_string(graph.num_vertices) + " vertices");
    }
    j["feature_len"] = x.cols();
  }
  j["stats"] = aggr::to_json(aggr::compute_stats(graph));
  if (!output.empty()) aggr::write_edge_list(std::filesystem::path(output), graph);
  std::cout << "vertices: " << graph.num_vertices << "\nedges: " << graph.num_edges() << '\n' << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_verify(const GraphFlags& g, std::size_t feature_len, unsigned threads, const std::string& op_filter) {
  ordered_json cfg = graph_flags_json(g);
  cfg["feature_len"] = feature_len;
  cfg["threads"] = threads;
  cfg["op"] = op_filter;
  echo_config("verify", cfg);

  const auto graph = aggr::load_graph(graph_source(g));
  const auto layer = aggr::prepare_layer_graph(graph, aggr::Model::gin);
  layer.csr.validate();
  layer.csc.validate();

  const auto x = aggr::random_features(graph.num_vertices, feature_len, g.seed);
  std::vector<float> random_weights(graph.num_edges());
  {
    aggr::CounterRng rng(g.seed, 0x7E1647ull);
    for (auto& w : random_weights) w = static_cast<float>(0.1 + 1.9 * rng.uniform());
  }
  const bool dense = graph.num_vertices <= kDenseOracleLimit;
  const aggr::ExecPolicy policy{threads};

  std::vector<aggr::ReduceOp> ops;
  if (op_filter.empty()) {
    ops = {aggr::ReduceOp::add, aggr::ReduceOp::mean, aggr::ReduceOp::max};
  } else {
    ops = {aggr::parse_reduce_op(op_filter)};
  }

  struct WeightMode {
    const char* name;
    std::span<const float> weights;
  };
  std::vector<WeightMode> modes = {{"unweighted", {}}, {"random-weights", random_weights}};
  if (graph.weighted()) modes.push_back({"graph-weights", graph.weight_span()});

  bool all_ok = true;
  std::cout << "graph: " << aggr::describe(graph_source(g)) << " (" << graph.num_vertices << " vertices, "
            << graph.num_edges() << " edges)\n"
            << "reference: " << (dense ? "dense oracle" : "reduce path (pairwise)") << ", rtol " << kVerifyRtol
            << " for add/mean, exact for max\n";
  for (const auto& mode : modes) {
    for (auto op : ops) {
      std::optional<aggr::DenseReference> ref;
      std::optional<aggr::FeatureMatrix> baseline;
      std::optional<aggr::FeatureMatrix> magnitude;
      if (dense) {
        ref = aggr::dense_reference(graph, x, op, mode.weights);
      } else {
        baseline = aggr::aggregate(layer, x, aggr::Abstraction::reduce, op, mode.weights, policy).features;
        if (op != aggr::ReduceOp::max) {
          std::vector<float> csr_weights(mode.weights.size());
          for (std::size_t i = 0; i < csr_weights.size(); ++i) csr_weights[i] = mode.weights[layer.csr_from_coo[i]];
          magnitude = aggr::aggregate_magnitude(layer.csr, x, op, csr_weights);
        }
      }
      for (auto a : {aggr::Abstraction::scatter, aggr::Abstraction::reduce, aggr::Abstraction::pull,
                     aggr::Abstraction::push}) {
        if (!dense && a == aggr::Abstraction::reduce) continue;
        const auto got = aggr::aggregate(layer, x, a, op, mode.weights, policy).features;
        const double rtol = op == aggr::ReduceOp::max ? 0.0 : kVerifyRtol;
        const auto cmp = dense ? aggr::compare(got, *ref, kVerifyRtol)
                               : aggr::compare(got, *baseline, rtol, magnitude ? &*magnitude : nullptr);
        all_ok = all_ok && cmp.ok;
        std::ostringstream err;
        err.precision(3);
        err << std::scientific << cmp.max_relative_error;
        std::cout << (cmp.ok ? "PASS " : "FAIL ") << aggr::to_string(a) << ' ' << aggr::to_string(op) << ' '
                  << mode.name << " max_rel_err=" << err.str();
        if (!cmp.ok) std::cout << " mismatches=" << cmp.mismatches;
        std::cout << '\n';
      }
    }
  }
  std::cout << (all_ok ? "verify: pass" : "verify: FAIL") << '\n';
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_bench(const GraphFlags& g, const RunFlags& r) {
  ordered_json cfg_json = graph_flags_json(g);
  cfg_json.update(run_flags_json(r, true));
  echo_config("bench", cfg_json);
  const auto cfg = bench_config(g, r);

  if (r.abstraction == "all") {
    const auto cmp = aggr::compare_abstractions(cfg, r.include_push);
    print_ranking(cmp);
    emit(r.output, [&](std::ostream& out) {
      if (r.format == "csv") {
        aggr::write_csv(out, cmp.reports);
        return;
      }
      ordered_json j;
      j["reports"] = ordered_json::array();
      for (const auto& rep : cmp.reports) j["reports"].push_back(aggr::to_json(rep));
      j["ranking"] = ordered_json{{"by_latency", cmp.by_latency}, {"by_memory", cmp.by_memory}};
      out << j.dump(2) << '\n';
    });
    return kExitOk;
  }

  const auto report = aggr::run_benchmark(cfg);
  emit(r.output, [&](std::ostream& out) {
    if (r.format == "csv") {
      aggr::write_csv(out, {report});
    } else {
      out << aggr::to_json(report).dump(2) << '\n';
    }
  });
  return kExitOk;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw aggr::UsageError("invalid sweep value `" + item + "`");
    }
  }
  if (values.empty()) throw aggr::UsageError("--values needs a comma-separated list");
  return values;
}

int cmd_sweep(const GraphFlags& g, const RunFlags& r, const std::string& property, const std::string& values) {
  ordered_json cfg_json = graph_flags_json(g);
  cfg_json.update(run_flags_json(r, true));
  cfg_json["property"] = property;
  cfg_json["values"] = values;
  echo_config("sweep", cfg_json);

  const auto prop = aggr::parse_sweep_property(property);
  if (r.abstraction == "all") throw aggr::UsageError("sweep runs one abstraction at a time");
  GraphFlags base = g;
  if (base.path.empty() && base.family.empty()) {
    base.family = prop == aggr::SweepProperty::exponent ? "powerlaw"
                  : prop == aggr::SweepProperty::rewire_p ? "ws"
                                                          : "er";
  }
  const auto cfg = bench_config(base, r);
  const auto reports = aggr::sweep(prop, parse_values(values), cfg);
  emit(r.output, [&](std::ostream& out) {
    if (r.format == "csv") {
      aggr::write_csv(out, reports);
      return;
    }
    for (const auto& rep : reports) out << aggr::to_json(rep).dump() << '\n';
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characterise GNN aggregation abstractions (scatter, reduce, pull, push)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(aggr::version()));

  GraphFlags gen_graph;
  std::string gen_output;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic graph as an edge list plus a stats sidecar");
  add_graph_flags(gen, gen_graph, false);
  gen->add_option("-o", gen_output, "Output edge-list file (default stdout)");

  GraphFlags stats_graph;
  auto* stats = app.add_subcommand("stats", "Print structural statistics of a graph");
  add_graph_flags(stats, stats_graph, true);

  GraphFlags verify_graph;
  std::size_t verify_feature_len = 8;
  unsigned verify_threads = 1;
  std::string verify_op;
  auto* verify = app.add_subcommand("verify", "Check every abstraction against the reference");
  add_graph_flags(verify, verify_graph, true);
  verify->add_option("--feature-len", verify_feature_len, "Random feature length")->capture_default_str();
  verify->add_option("--threads", verify_threads, "Kernel threads")->envname("AGGRBENCH_THREADS");
  verify->add_option("--op", verify_op, "Only check this operator (add, max, mean)");

  GraphFlags bench_graph;
  RunFlags bench_run;
  auto* bench = app.add_subcommand("bench", "Benchmark one GNN layer");
  add_graph_flags(bench, bench_graph, true);
  add_run_flags(bench, bench_run, true);

  GraphFlags sweep_graph;
  RunFlags sweep_run;
  sweep_run.format = "csv";
  std::string sweep_property;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Benchmark across values of one graph or feature property");
  add_graph_flags(sweep, sweep_graph, true);
  add_run_flags(sweep, sweep_run, true);
  sweep->add_option("--property", sweep_property, "density, exponent, rewire_p or feature_len")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

  GraphFlags ingest_graph;
  std::string ingest_features;
  std::string ingest_output;
  auto* ingest = app.add_subcommand("ingest", "Parse an edge list, optionally symmetrize, and report its size");
  add_graph_flags(ingest, ingest_graph, true);
  ingest->add_option("--features", ingest_features, "Feature file to attach and check");
  ingest->add_option("-o", ingest_output, "Write the normalized edge list here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_graph, gen_output);
    if (*stats) return cmd_stats(stats_graph);
    if (*verify) return cmd_verify(verify_graph, verify_feature_len, verify_threads, verify_op);
    if (*bench) return cmd_bench(bench_graph, bench_run);
    if (*sweep) return cmd_sweep(sweep_graph, sweep_run, sweep_property, sweep_values);
    if (*ingest) return cmd_ingest(ingest_graph, ingest_features, ingest_output);
  } catch (const aggr::OutOfMemoryError& e) {
    ordered_json j{{"error", "out_of_memory"}, {"attempted_bytes", e.attempted_bytes()}, {"message", e.what()}};
    std::cerr << j.dump() << '\n';
    return kExitFailure;
  } catch (const aggr::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const aggr::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const aggr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const aggr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
