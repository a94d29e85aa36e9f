#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <optional>
#include <string>

#include "aggrbench/aggregate.hpp"
#include "aggrbench/bench.hpp"
#include "aggrbench/error.hpp"
#include "aggrbench/graph.hpp"
#include "aggrbench/layers.hpp"
#include "aggrbench/synth.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IdArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

aggr::FeatureMatrix to_matrix(const FloatArray& a) {
  if (a.ndim() == 1) return aggr::FeatureMatrix(a.shape(0), 1, {a.data(), static_cast<std::size_t>(a.size())});
  if (a.ndim() != 2) throw aggr::ValidationError("features must be a 1-D or 2-D array");
  return aggr::FeatureMatrix(a.shape(0), a.shape(1), {a.data(), static_cast<std::size_t>(a.size())});
}

py::array_t<float> to_array(const aggr::FeatureMatrix& m) {
  py::array_t<float> out({m.rows(), m.cols()});
  if (m.size()) std::memcpy(out.mutable_data(), m.data(), m.bytes());
  return out;
}

std::vector<float> to_weights(const std::optional<FloatArray>& w) {
  if (!w) return {};
  return {w->data(), w->data() + w->size()};
}

py::dict counters_dict(const aggr::CostCounters& c) {
  py::dict d;
  d["messages_materialized"] = c.messages_materialized;
  d["feature_reads"] = c.feature_reads;
  d["feature_writes"] = c.feature_writes;
  d["partial_sum_elements"] = c.partial_sum_elements;
  d["edges_traversed"] = c.edges_traversed;
  return d;
}

py::object json_to_py(const aggr::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

aggr::CooGraph make_graph(const IdArray& src, const IdArray& dst, std::size_t num_vertices,
                          const std::optional<FloatArray>& weights) {
  if (src.ndim() != 1 || dst.ndim() != 1 || src.size() != dst.size()) {
    throw aggr::ValidationError("src and dst must be 1-D arrays of equal length");
  }
  std::vector<aggr::Edge> edges(src.size());
  for (py::ssize_t i = 0; i < src.size(); ++i) {
    const auto u = src.data()[i], v = dst.data()[i];
    if (u < 0 || v < 0) throw aggr::ValidationError("coo: edge " + std::to_string(i) + " has a negative id");
    edges[i] = {static_cast<aggr::vertex_t>(u), static_cast<aggr::vertex_t>(v)};
  }
  std::optional<std::vector<float>> w;
  if (weights) w = to_weights(weights);
  return aggr::from_edge_list(edges, num_vertices, std::move(w));
}

template <class T>
py::array_t<T> vec_to_array(const std::vector<T>& v) {
  py::array_t<T> out(v.size());
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(T));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scatter, reduce, pull and push aggregation kernels with a benchmark harness";
  m.attr("__version__") = std::string(aggr::version());

  auto base = py::register_exception<aggr::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<aggr::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<aggr::UsageError>(m, "UsageError", base.ptr());
  py::register_exception<aggr::ContractError>(m, "ContractError", base.ptr());
  py::register_exception<aggr::IoError>(m, "IoError", base.ptr());
  py::register_exception<aggr::OutOfMemoryError>(m, "OutOfMemoryError", base.ptr());

  py::class_<aggr::CooGraph>(m, "Graph")
      .def(py::init(&make_graph), py::arg("src"), py::arg("dst"), py::arg("num_vertices"),
           py::arg("weights") = py::none(), "Edge list sorted by source; duplicates are kept.")
      .def_property_readonly("num_vertices", [](const aggr::CooGraph& g) { return g.num_vertices; })
      .def_property_readonly("num_edges", &aggr::CooGraph::num_edges)
      .def_property_readonly("src",
                             [](const aggr::CooGraph& g) {
                               std::vector<std::int64_t> s;
                               for (const auto& e : g.edges) s.push_back(e.src);
                               return vec_to_array(s);
                             })
      .def_property_readonly("dst",
                             [](const aggr::CooGraph& g) {
                               std::vector<std::int64_t> d;
                               for (const auto& e : g.edges) d.push_back(e.dst);
                               return vec_to_array(d);
                             })
      .def_property_readonly("weights",
                             [](const aggr::CooGraph& g) -> py::object {
                               if (!g.weights) return py::none();
                               return vec_to_array(*g.weights);
                             })
      .def("to_csr",
           [](const aggr::CooGraph& g) {
             const auto csr = aggr::coo_to_csr(g);
             std::vector<std::int64_t> ptr(csr.row_ptr.begin(), csr.row_ptr.end());
             std::vector<std::int64_t> idx(csr.col_idx.begin(), csr.col_idx.end());
             return py::make_tuple(vec_to_array(ptr), vec_to_array(idx));
           },
           "(row_ptr, col_idx), rows are destinations")
      .def("to_csc",
           [](const aggr::CooGraph& g) {
             const auto csc = aggr::coo_to_csc(g);
             std::vector<std::int64_t> ptr(csc.col_ptr.begin(), csc.col_ptr.end());
             std::vector<std::int64_t> idx(csc.row_idx.begin(), csc.row_idx.end());
             return py::make_tuple(vec_to_array(ptr), vec_to_array(idx));
           },
           "(col_ptr, row_idx), columns are sources")
      .def("symmetrize", [](const aggr::CooGraph& g) { return aggr::symmetrize(g); })
      .def("stats", [](const aggr::CooGraph& g) { return json_to_py(aggr::to_json(aggr::compute_stats(g))); })
      .def("__repr__", [](const aggr::CooGraph& g) {
        return "<Graph vertices=" + std::to_string(g.num_vertices) + " edges=" + std::to_string(g.num_edges()) + ">";
      });

  m.def(
      "read_edge_list",
      [](const std::filesystem::path& path, bool symmetrize, std::optional<std::size_t> num_vertices) {
        auto g = aggr::read_edge_list(path, aggr::EdgeListOptions{num_vertices});
        return symmetrize ? aggr::symmetrize(g) : g;
      },
      py::arg("path"), py::arg("symmetrize") = false, py::arg("num_vertices") = py::none());
  m.def(
      "write_edge_list",
      [](const std::filesystem::path& path, const aggr::CooGraph& g) { aggr::write_edge_list(path, g); },
      py::arg("path"), py::arg("graph"));

  m.def(
      "generate",
      [](const std::string& family, std::size_t n, double density, double exponent, double mean_degree,
         std::size_t k, double p, std::uint64_t seed) {
        aggr::SynthSpec s;
        s.family = aggr::parse_family(family);
        s.num_vertices = n;
        s.density = density;
        s.exponent = exponent;
        s.mean_degree = mean_degree;
        s.ring_degree = k;
        s.rewire_p = p;
        s.seed = seed;
        return aggr::generate(s);
      },
      py::arg("family"), py::arg("n") = 10000, py::arg("density") = 0.01, py::arg("exponent") = 2.5,
      py::arg("mean_degree") = 20.0, py::arg("k") = 10, py::arg("p") = 0.1, py::arg("seed") = 0,
      "Seeded synthetic graph: family is er, powerlaw or ws.");

  m.def(
      "random_features",
      [](std::size_t rows, std::size_t cols, std::uint64_t seed) {
        return to_array(aggr::random_features(rows, cols, seed));
      },
      py::arg("rows"), py::arg("cols"), py::arg("seed") = 0);

  m.def(
      "aggregate",
      [](const aggr::CooGraph& g, const FloatArray& x, const std::string& abstraction, const std::string& op,
         const std::optional<FloatArray>& weights, unsigned threads) {
        const auto a = aggr::parse_abstraction(abstraction);
        const auto r = aggr::parse_reduce_op(op);
        const auto xm = to_matrix(x);
        auto weighted = g;
        if (weights) weighted.weights = to_weights(weights);
        aggr::Aggregation out;
        {
          py::gil_scoped_release release;
          const auto lg = aggr::prepare_layer_graph(weighted, aggr::Model::gin);
          out = aggr::aggregate(lg, xm, a, r, lg.coo.weight_span(), aggr::ExecPolicy{threads});
        }
        return py::make_tuple(to_array(out.features), counters_dict(out.counters));
      },
      py::arg("graph"), py::arg("x"), py::arg("abstraction") = "pull", py::arg("op") = "add",
      py::arg("weights") = py::none(), py::arg("threads") = 1,
      "Aggregate x over the graph's in-edges. Weights default to the graph's own. Returns (output, counters).");

  m.def(
      "dense_oracle",
      [](const aggr::CooGraph& g, const FloatArray& x, const std::string& op, const std::optional<FloatArray>& weights) {
        const auto w = weights ? to_weights(weights) : std::vector<float>(g.weight_span().begin(), g.weight_span().end());
        return to_array(aggr::dense_oracle(g, to_matrix(x), aggr::parse_reduce_op(op), w));
      },
      py::arg("graph"), py::arg("x"), py::arg("op") = "add", py::arg("weights") = py::none());

  m.def(
      "forward_layer",
      [](const std::string& model, const aggr::CooGraph& g, const FloatArray& x, const std::string& abstraction,
         const std::string& op, std::size_t out_dim, std::uint64_t seed, float gin_epsilon, unsigned threads) {
        aggr::LayerSpec spec;
        spec.model = aggr::parse_model(model);
        spec.abstraction = aggr::parse_abstraction(abstraction);
        spec.op = aggr::parse_reduce_op(op);
        const auto xm = to_matrix(x);
        spec.in_dim = xm.cols();
        spec.out_dim = out_dim;
        spec.gin_epsilon = gin_epsilon;
        aggr::validate(spec);
        const auto params = aggr::LayerParams::random(spec, seed);
        std::optional<aggr::FeatureMatrix> ef;
        if (spec.model == aggr::Model::pdn) ef = aggr::random_features(g.num_edges(), spec.edge_feature_len, seed);
        aggr::LayerOutput out;
        {
          py::gil_scoped_release release;
          const auto lg = aggr::prepare_layer_graph(g, spec.model, std::move(ef));
          out = aggr::forward_layer(spec, lg, xm, params, aggr::ExecPolicy{threads});
        }
        return py::make_tuple(to_array(out.features), counters_dict(out.counters));
      },
      py::arg("model"), py::arg("graph"), py::arg("x"), py::arg("abstraction") = "pull", py::arg("op") = "add",
      py::arg("out_dim") = 8, py::arg("seed") = 0, py::arg("gin_epsilon") = 0.0f, py::arg("threads") = 1,
      "One layer with seeded random parameters. Returns (output, counters).");

  m.def(
      "run_benchmark",
      [](const aggr::CooGraph& g, const std::string& model, const std::string& abstraction, const std::string& op,
         std::size_t feature_len, std::size_t out_dim, std::size_t repetitions, std::size_t warmup, unsigned threads,
         std::uint64_t seed, const std::string& label) {
        aggr::BenchConfig cfg;
        cfg.graph = aggr::InlineGraph{g, label};
        cfg.layer.model = aggr::parse_model(model);
        cfg.layer.abstraction = aggr::parse_abstraction(abstraction);
        cfg.layer.op = aggr::parse_reduce_op(op);
        cfg.layer.out_dim = out_dim;
        cfg.feature_len = feature_len;
        cfg.repetitions = repetitions;
        cfg.warmup = warmup;
        cfg.threads = threads;
        cfg.seed = seed;
        aggr::BenchReport r;
        {
          py::gil_scoped_release release;
          r = aggr::run_benchmark(cfg);
        }
        return json_to_py(aggr::to_json(r));
      },
      py::arg("graph"), py::arg("model") = "gcn", py::arg("abstraction") = "pull", py::arg("op") = "add",
      py::arg("feature_len") = 32, py::arg("out_dim") = 8, py::arg("repetitions") = 300, py::arg("warmup") = 10,
      py::arg("threads") = 1, py::arg("seed") = 0, py::arg("label") = "inline",
      "Timed benchmark of one layer; returns the JSON report as a dict.");

  m.def("supports", [](const std::string& model, const std::string& abstraction) {
    return aggr::supports(aggr::parse_model(model), aggr::parse_abstraction(abstraction));
  });
}
