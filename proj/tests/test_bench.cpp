#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aggrbench/bench.hpp"
#include "aggrbench/error.hpp"
#include "support.hpp"

using namespace aggr;

namespace {

BenchConfig small_config(GraphSource source, Model model = Model::gcn, Abstraction a = Abstraction::pull) {
  BenchConfig cfg;
  cfg.graph = std::move(source);
  cfg.layer.model = model;
  cfg.layer.abstraction = a;
  cfg.repetitions = 5;
  cfg.warmup = 1;
  cfg.feature_len = 8;
  return cfg;
}

SynthSpec er(std::size_t n, double density, std::uint64_t seed = 0) {
  return SynthSpec{.family = Family::erdos_renyi, .num_vertices = n, .density = density, .seed = seed};
}

}  // namespace

TEST_SUITE("bench.timing") {
  TEST_CASE("statistics recomputed from the raw samples") {
    const std::vector<std::int64_t> s = {5, 1, 4, 2, 3, 100};
    const auto t = TimingStats::from_samples(s);
    CHECK(t.samples_ns == s);
    CHECK(t.mean_ns == 115.0 / 6.0);
    CHECK(t.median_ns == 3.5);
    double ss = 0.0;
    for (auto v : s) ss += (v - 115.0 / 6.0) * (v - 115.0 / 6.0);
    CHECK(t.stddev_ns == doctest::Approx(std::sqrt(ss / 5.0)).epsilon(1e-15));
  }

  TEST_CASE("one sample") {
    const auto t = TimingStats::from_samples({42});
    CHECK(t.mean_ns == 42.0);
    CHECK(t.median_ns == 42.0);
    CHECK(t.stddev_ns == 0.0);
  }
}

TEST_SUITE("bench.run") {
  TEST_CASE("one repetition on the triangle") {
    auto cfg = small_config(InlineGraph{testing::triangle(), "triangle"});
    cfg.repetitions = 1;
    const auto r = run_benchmark(cfg);
    REQUIRE(r.timing.samples_ns.size() == 1);
    CHECK(r.timing.mean_ns == static_cast<double>(r.timing.samples_ns[0]));
    CHECK(r.graph == "triangle");
    CHECK(r.graph_stats.num_edges == 3);
    CHECK(r.peak_aux_bytes >= r.output_bytes);
    CHECK(r.output_bytes == 3 * 8 * sizeof(float));
  }

  TEST_CASE("reported mean is the arithmetic mean of the samples") {
    auto cfg = small_config(er(300, 0.05));
    cfg.repetitions = 37;
    const auto r = run_benchmark(cfg);
    REQUIRE(r.timing.samples_ns.size() == 37);
    double sum = 0.0;
    for (auto v : r.timing.samples_ns) sum += static_cast<double>(v);
    CHECK(r.timing.mean_ns == sum / 37.0);
    auto sorted = r.timing.samples_ns;
    std::sort(sorted.begin(), sorted.end());
    CHECK(r.timing.median_ns == static_cast<double>(sorted[18]));
  }

  TEST_CASE("identical configurations give identical counters and outputs") {
    for (auto a : {Abstraction::scatter, Abstraction::reduce, Abstraction::pull, Abstraction::push}) {
      const auto cfg = small_config(er(400, 0.02, 3), Model::gcn, a);
      const auto r1 = run_benchmark(cfg);
      const auto r2 = run_benchmark(cfg);
      CHECK(r1.counters == r2.counters);
      CHECK(r1.output_digest == r2.output_digest);
      CHECK(r1.peak_aux_bytes == r2.peak_aux_bytes);
      CHECK(deterministic_payload(r1).dump() == deterministic_payload(r2).dump());
    }
  }

  TEST_CASE("scatter peak exceeds the message buffer and the pull peak") {
    auto cfg = small_config(er(10000, 0.01), Model::gin, Abstraction::scatter);
    cfg.feature_len = 32;
    cfg.repetitions = 1;
    cfg.warmup = 0;
    const auto s = run_benchmark(cfg);
    cfg.layer.abstraction = Abstraction::pull;
    const auto p = run_benchmark(cfg);
    CHECK(s.peak_aux_bytes >= s.graph_stats.num_edges * 32 * sizeof(float));
    CHECK(p.peak_aux_bytes < s.peak_aux_bytes);
  }

  TEST_CASE("memory model: scatter minus pull peak is the message buffer") {
    // E/N = 20. GIN aggregates unweighted, so the buffer is the only difference;
    // GCN also stages one permuted weight per edge on the pull path.
    for (auto model : {Model::gin, Model::gcn}) {
      auto cfg = small_config(er(2000, 0.01, 5), model, Abstraction::scatter);
      cfg.feature_len = 32;
      cfg.layer.out_dim = 32;
      cfg.repetitions = 2;
      const auto s = run_benchmark(cfg);
      cfg.layer.abstraction = Abstraction::pull;
      const auto p = run_benchmark(cfg);
      const double diff = static_cast<double>(s.peak_aux_bytes) - static_cast<double>(p.peak_aux_bytes);
      const double model_bytes = static_cast<double>(s.counters.messages_materialized) * sizeof(float);
      CHECK_MESSAGE(std::abs(diff - model_bytes) <= 0.10 * model_bytes, to_string(model));
    }
  }

  TEST_CASE("feature file and dimension checks") {
    testing::TempDir dir("bench");
    write_features(dir / "x.bin", random_features(3, 5, 1));
    auto cfg = small_config(InlineGraph{testing::triangle()});
    cfg.features_path = dir / "x.bin";
    CHECK(run_benchmark(cfg).in_dim == 5);
    write_features(dir / "bad.bin", random_features(4, 5, 1));
    cfg.features_path = dir / "bad.bin";
    CHECK_THROWS_AS(run_benchmark(cfg), ValidationError);
  }

  TEST_CASE("invalid configurations") {
    auto cfg = small_config(er(50, 0.1));
    cfg.repetitions = 0;
    CHECK_THROWS_AS(run_benchmark(cfg), UsageError);
    cfg = small_config(er(50, 0.1), Model::gat, Abstraction::pull);
    CHECK_THROWS_AS(run_benchmark(cfg), UsageError);
    cfg = small_config(er(50, 3.0));
    CHECK_THROWS_AS(run_benchmark(cfg), ValidationError);
  }

  TEST_CASE("memory budget surfaces the attempted allocation") {
    auto cfg = small_config(er(2000, 0.01), Model::gcn, Abstraction::scatter);
    cfg.memory_limit_bytes = 4096;
    try {
      (void)run_benchmark(cfg);
      FAIL("expected OutOfMemoryError");
    } catch (const OutOfMemoryError& e) {
      CHECK(e.attempted_bytes() > 4096);
    }
    CHECK(memory::Tracker::global().limit() == 0);
  }
}

TEST_SUITE("bench.compare") {
  TEST_CASE("gcn compares scatter, reduce and pull") {
    const auto cmp = compare_abstractions(small_config(er(200, 0.05)));
    REQUIRE(cmp.reports.size() == 3);
    CHECK(cmp.reports[0].abstraction == "scatter");
    CHECK(cmp.reports[1].abstraction == "reduce");
    CHECK(cmp.reports[2].abstraction == "pull");
    CHECK(cmp.by_latency.size() == 3);
    CHECK(cmp.by_memory.size() == 3);
    for (const auto& r : cmp.reports) CHECK(r.output_digest != 0);
    // Memory ranking is deterministic: scatter materializes messages.
    CHECK(cmp.by_memory.back() == "scatter");
    CHECK(compare_abstractions(small_config(er(200, 0.05)), true).reports.size() == 4);
  }

  TEST_CASE("gat compares two abstractions") {
    const auto cmp = compare_abstractions(small_config(er(200, 0.05), Model::gat, Abstraction::scatter));
    REQUIRE(cmp.reports.size() == 2);
    CHECK(cmp.reports[0].abstraction == "scatter");
    CHECK(cmp.reports[1].abstraction == "reduce");
  }

  TEST_CASE("empty graph materializes no messages") {
    const auto cmp = compare_abstractions(small_config(InlineGraph{from_edge_list({}, 0), "empty"}), true);
    REQUIRE(cmp.reports.size() == 4);
    for (const auto& r : cmp.reports) CHECK(r.counters.messages_materialized == 0);
  }

  TEST_CASE("edgeless graph: gcn still passes its self-loop messages") {
    const auto edgeless = InlineGraph{from_edge_list({}, 6), "edgeless"};
    const auto gin = compare_abstractions(small_config(edgeless, Model::gin), true);
    for (const auto& r : gin.reports) CHECK(r.counters.messages_materialized == 0);
    const auto gcn = compare_abstractions(small_config(edgeless), true);
    CHECK(gcn.reports[0].counters.messages_materialized == 6 * 8);
    for (std::size_t i = 1; i < gcn.reports.size(); ++i) CHECK(gcn.reports[i].counters.messages_materialized == 0);
  }
}

TEST_SUITE("bench.sweep") {
  TEST_CASE("one report per value carrying the swept value") {
    const std::vector<double> values = {0.01, 0.02, 0.05};
    const auto reports = sweep(SweepProperty::density, values, small_config(er(300, 0.1)));
    REQUIRE(reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(reports[i].sweep.has_value());
      CHECK(reports[i].sweep->property == "density");
      CHECK(reports[i].sweep->value == values[i]);
    }
    CHECK(reports[0].graph_stats.num_edges < reports[2].graph_stats.num_edges);
  }

  TEST_CASE("structural sweeps switch the family") {
    auto base = small_config(er(400, 0.01));
    const auto r = sweep(SweepProperty::rewire_p, {0.0}, base);
    CHECK(r[0].graph.starts_with("ws("));
    CHECK(r[0].graph_stats.global_clustering_coefficient == doctest::Approx(ring_lattice_clustering(10)));
    const auto e = sweep(SweepProperty::exponent, {2.5}, base);
    CHECK(e[0].graph.starts_with("powerlaw("));
  }

  TEST_CASE("feature length sweep") {
    const auto r = sweep(SweepProperty::feature_len, {4, 16}, small_config(er(100, 0.05), Model::gin));
    CHECK(r[0].in_dim == 4);
    CHECK(r[1].in_dim == 16);
    CHECK_THROWS_AS(sweep(SweepProperty::feature_len, {2.5}, small_config(er(100, 0.05))), UsageError);
  }

  TEST_CASE("single-value sweep matches run_benchmark") {
    const auto cfg = small_config(er(300, 0.1));
    auto swept = sweep(SweepProperty::density, {0.02}, cfg)[0];
    auto direct_cfg = cfg;
    std::get<SynthSpec>(direct_cfg.graph).density = 0.02;
    const auto direct = run_benchmark(direct_cfg);
    swept.sweep.reset();
    CHECK(deterministic_payload(swept).dump() == deterministic_payload(direct).dump());
  }

  TEST_CASE("structural sweep needs a synthetic source") {
    CHECK_THROWS_AS(sweep(SweepProperty::density, {0.1}, small_config(InlineGraph{testing::triangle()})), UsageError);
  }
}

TEST_SUITE("bench.serialize") {
  TEST_CASE("json round trip is byte-identical") {
    auto cfg = small_config(er(200, 0.05));
    cfg.layer.op = ReduceOp::max;
    const auto r = sweep(SweepProperty::density, {0.03}, cfg)[0];
    const auto text = to_json(r).dump(2);
    const auto back = report_from_json(ordered_json::parse(text));
    CHECK(back == r);
    CHECK(to_json(back).dump(2) == text);
  }

  TEST_CASE("round trip keeps absent power-law fields") {
    const auto r = run_benchmark(small_config(InlineGraph{testing::triangle()}));
    REQUIRE_FALSE(r.graph_stats.powerlaw_exponent_mle.has_value());
    const auto back = report_from_json(ordered_json::parse(to_json(r).dump()));
    CHECK(back == r);
  }

  TEST_CASE("stable field order and no timing in the payload") {
    const auto r = run_benchmark(small_config(InlineGraph{testing::triangle()}));
    const auto j = to_json(r);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"schema", "config", "graph_stats", "counters", "memory", "output_digest",
                                           "environment", "timing"});
    CHECK_FALSE(deterministic_payload(r).contains("timing"));
    CHECK(j["environment"]["trimming"] == "none");
    CHECK(j["environment"]["precision"] == "fp32");
  }

  TEST_CASE("csv has one row per report and matching column counts") {
    const auto reports = sweep(SweepProperty::density, {0.02, 0.04}, small_config(er(100, 0.1)));
    std::ostringstream out;
    write_csv(out, reports);
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == csv_header());
    // Quoted graph labels contain commas; count fields outside quotes.
    auto fields = [](const std::string& s) {
      std::size_t n = 1;
      bool quoted = false;
      for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) ++n;
      }
      return n;
    };
    for (const auto& l : lines) CHECK(fields(l) == fields(lines[0]));
    CHECK(lines[1].find(",density,0.02,") != std::string::npos);
  }
}
