#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "aggrbench/graph.hpp"
#include "support.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const testing::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " '" AGGRBENCH_CLI "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// The report without its timing block, re-serialized.
std::string payload(const std::string& json_text) {
  auto j = nlohmann::ordered_json::parse(json_text);
  j.erase("timing");
  return j.dump();
}

}  // namespace

TEST_SUITE("cli.gen") {
  TEST_CASE("writes the edge list and a stats sidecar") {
    testing::TempDir dir("cli-gen");
    const auto g = dir / "g.el";
    const auto r = cli(dir, "gen --family er --n 2000 --density 0.01 --seed 7 -o " + q(g));
    REQUIRE(r.code == 0);
    CHECK(r.err.find("# config") != std::string::npos);
    const auto graph = aggr::read_edge_list(g);
    CHECK(graph.num_vertices == 2000);
    const auto stats = nlohmann::json::parse(slurp(g.string() + ".stats.json"));
    CHECK(stats["num_edges"] == graph.num_edges());
    CHECK(stats["num_vertices"] == 2000);
  }

  TEST_CASE("same seed gives an identical file") {
    testing::TempDir dir("cli-gen-det");
    REQUIRE(cli(dir, "gen --family powerlaw --n 3000 --exponent 2.5 --mean-degree 10 --seed 3 -o " + q(dir / "a")).code == 0);
    REQUIRE(cli(dir, "gen --family powerlaw --n 3000 --exponent 2.5 --mean-degree 10 --seed 3 -o " + q(dir / "b")).code == 0);
    REQUIRE(cli(dir, "gen --family powerlaw --n 3000 --exponent 2.5 --mean-degree 10 --seed 4 -o " + q(dir / "c")).code == 0);
    CHECK(slurp(dir / "a") == slurp(dir / "b"));
    CHECK(slurp(dir / "a.stats.json") == slurp(dir / "b.stats.json"));
    CHECK(slurp(dir / "a") != slurp(dir / "c"));
  }

  TEST_CASE("invalid parameters exit with 2") {
    testing::TempDir dir("cli-gen-bad");
    auto r = cli(dir, "gen --family er --n 100 --density 1.5 -o " + q(dir / "g"));
    CHECK(r.code == 2);
    CHECK(r.err.find("density") != std::string::npos);
    CHECK(cli(dir, "gen --family ws --n 100 --k 3").code == 2);
    CHECK(cli(dir, "gen --family er --n 100 --no-such-flag").code == 2);
    CHECK(cli(dir, "gen --n 100").code == 2);
    CHECK(cli(dir, "").code == 2);
    CHECK(cli(dir, "--help").code == 0);
  }
}

TEST_SUITE("cli.verify") {
  TEST_CASE("triangle passes") {
    testing::TempDir dir("cli-verify");
    {
      std::ofstream f(dir / "tri.el");
      f << "0 1\n1 2\n2 0\n";
    }
    const auto r = cli(dir, "verify " + q(dir / "tri.el"));
    CHECK(r.code == 0);
    CHECK(r.out.find("verify: pass") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
  }

  TEST_CASE("large graphs use pairwise checks") {
    testing::TempDir dir("cli-verify-big");
    const auto r = cli(dir, "verify --family er --n 5000 --density 0.002 --seed 1 --op add");
    CHECK(r.code == 0);
    CHECK(r.out.find("pairwise") != std::string::npos);
  }

  TEST_CASE("weighted files and threads") {
    testing::TempDir dir("cli-verify-w");
    aggr::write_edge_list(dir / "w.el", testing::random_graph(12));
    CHECK(cli(dir, "verify " + q(dir / "w.el") + " --threads 3 --feature-len 5").code == 0);
  }
}

TEST_SUITE("cli.bench") {
  TEST_CASE("bench emits one json report with payload determinism") {
    testing::TempDir dir("cli-bench");
    const std::string args = "bench --family er --n 500 --density 0.02 --seed 2 --reps 3 --warmup 1 --threads 1";
    const auto a = cli(dir, args);
    REQUIRE(a.code == 0);
    const auto b = cli(dir, args);
    REQUIRE(b.code == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["config"]["model"] == "gcn");
    CHECK(j["config"]["abstraction"] == "pull");
    CHECK(j["timing"]["samples_ns"].size() == 3);
    CHECK(payload(a.out) == payload(b.out));
  }

  TEST_CASE("gat with pull is a usage error") {
    testing::TempDir dir("cli-bench-gat");
    const auto r = cli(dir, "bench --family er --n 100 --model gat --abstraction pull --reps 1");
    CHECK(r.code == 2);
    CHECK(r.err.find("gat") != std::string::npos);
  }

  TEST_CASE("abstraction all reports a ranking") {
    testing::TempDir dir("cli-bench-all");
    const auto r = cli(dir, "bench --family er --n 300 --density 0.02 --abstraction all --reps 2 --warmup 0 -o " +
                                q(dir / "cmp.json"));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "cmp.json"));
    CHECK(j["reports"].size() == 3);
    CHECK(j["ranking"]["by_latency"].size() == 3);
    CHECK(r.err.find("ranking by mean latency") != std::string::npos);
  }

  TEST_CASE("thread count defaults from the environment") {
    testing::TempDir dir("cli-bench-env");
    const auto r = cli(dir, "bench --family er --n 200 --reps 1 --warmup 0", "AGGRBENCH_THREADS=3");
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["environment"]["threads"] == 3);
    const auto flag = cli(dir, "bench --family er --n 200 --reps 1 --warmup 0 --threads 2", "AGGRBENCH_THREADS=3");
    CHECK(nlohmann::json::parse(flag.out)["environment"]["threads"] == 2);
  }

  TEST_CASE("out of memory is a structured failure") {
    testing::TempDir dir("cli-bench-oom");
    const auto r = cli(dir, "bench --family er --n 2000 --abstraction scatter --reps 1 --memory-limit 1000");
    CHECK(r.code == 1);
    const auto line = r.err.substr(r.err.rfind("{\"error\""));
    const auto j = nlohmann::json::parse(line);
    CHECK(j["error"] == "out_of_memory");
    CHECK(j["attempted_bytes"].get<std::size_t>() > 1000);
  }

  TEST_CASE("features and params files") {
    testing::TempDir dir("cli-bench-files");
    {
      std::ofstream f(dir / "tri.el");
      f << "0 1\n1 2\n2 0\n";
    }
    aggr::write_features(dir / "x.bin", aggr::FeatureMatrix(3, 1, std::vector<float>{1, 2, 3}));
    aggr::write_features(dir / "w.bin", aggr::FeatureMatrix(1, 1, std::vector<float>{1}));
    {
      std::ofstream m(dir / "p.manifest");
      m << "weight=w.bin\n";
    }
    const auto r = cli(dir, "bench " + q(dir / "tri.el") + " --model gin --out-dim 1 --reps 1 --warmup 0 --features " +
                                q(dir / "x.bin") + " --params " + q(dir / "p.manifest"));
    REQUIRE(r.code == 0);
    // GIN on the triangle with unit weight yields [4, 3, 5]; check the digest
    // against the same matrix computed here.
    const auto j = nlohmann::json::parse(r.out);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(aggr::digest(aggr::FeatureMatrix(3, 1, std::vector<float>{4, 3, 5}))));
    CHECK(j["output_digest"] == std::string(hex));
  }
}

TEST_SUITE("cli.sweep") {
  TEST_CASE("sweep writes one csv row per value") {
    testing::TempDir dir("cli-sweep");
    const auto r = cli(dir, "sweep --property density --values 0.005,0.01,0.02 --n 400 --reps 2 --warmup 0 -o " +
                                q(dir / "s.csv"));
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(dir / "s.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
  }

  TEST_CASE("bad values are usage errors") {
    testing::TempDir dir("cli-sweep-bad");
    CHECK(cli(dir, "sweep --property density --values 0.1,abc --n 50").code == 2);
    CHECK(cli(dir, "sweep --property girth --values 1 --n 50").code == 2);
    CHECK(cli(dir, "sweep --values 1 --n 50").code == 2);
  }
}

TEST_SUITE("cli.ingest") {
  TEST_CASE("reports vertex and edge counts") {
    testing::TempDir dir("cli-ingest");
    aggr::write_edge_list(dir / "cora.el", testing::cora_like_graph());
    const auto r = cli(dir, "ingest " + q(dir / "cora.el"));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("vertices: 2708") != std::string::npos);
    CHECK(r.out.find("edges: 10556") != std::string::npos);
  }

  TEST_CASE("small graphs, symmetrize and features") {
    testing::TempDir dir("cli-ingest-small");
    {
      std::ofstream f(dir / "m.el");
      f << "# one small molecule-sized graph\n";
      for (int i = 0; i < 17; ++i) f << i << ' ' << i + 1 << '\n';
    }
    aggr::write_features(dir / "x.txt", aggr::random_features(18, 7, 1), false);
    const auto r = cli(dir, "ingest " + q(dir / "m.el") + " --symmetrize --features " + q(dir / "x.txt") + " -o " +
                                q(dir / "norm.el"));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("vertices: 18") != std::string::npos);
    CHECK(r.out.find("edges: 34") != std::string::npos);
    CHECK(aggr::read_edge_list(dir / "norm.el").num_edges() == 34);
    aggr::write_features(dir / "short.bin", aggr::random_features(5, 7, 1));
    CHECK(cli(dir, "ingest " + q(dir / "m.el") + " --features " + q(dir / "short.bin")).code == 2);
  }

  TEST_CASE("malformed line names its number") {
    testing::TempDir dir("cli-ingest-bad");
    {
      std::ofstream f(dir / "bad.el");
      f << "0 1\n1 2\n2 two\n";
    }
    const auto r = cli(dir, "ingest " + q(dir / "bad.el"));
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
  }

  TEST_CASE("missing file") {
    testing::TempDir dir("cli-ingest-missing");
    CHECK(cli(dir, "ingest " + q(dir / "nope.el")).code == 2);
  }
}

TEST_SUITE("cli.stats") {
  TEST_CASE("stats are deterministic json") {
    testing::TempDir dir("cli-stats");
    const auto a = cli(dir, "stats --family ws --n 400 --k 6 --p 0 --seed 1");
    const auto b = cli(dir, "stats --family ws --n 400 --k 6 --p 0 --seed 1");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["global_clustering_coefficient"].get<double>() == doctest::Approx(0.6));
  }
}
