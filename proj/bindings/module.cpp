// Python bindings for the core operations: graph construction, encoder
// training, pair similarity, edge attribution and protocol evaluation.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "simex/evaluator.hpp"
#include "simex/graph.hpp"

namespace py = pybind11;
using namespace simex;

namespace {

Graph make_graph(const std::vector<std::pair<NodeId, NodeId>>& edges,
                 const Matrix& features,
                 const std::vector<std::string>& labels) {
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (auto [u, v] : edges) es.push_back({u, v});
  return Graph(std::move(es), features, labels);
}

EdgeWeights weights_from(const Graph& g, const std::vector<double>& values) {
  if (values.empty()) return EdgeWeights::ones(g);
  if (static_cast<int>(values.size()) != g.edge_count())
    throw DimensionError("weights must have one value per edge");
  return EdgeWeights{values};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Node-pair similarity explanations for 2-layer graph convolutional "
      "encoders";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<Graph>(m, "Graph")
      .def(py::init(&make_graph), py::arg("edges"), py::arg("features"),
           py::arg("node_labels") = std::vector<std::string>{},
           "Undirected graph from (u, v) pairs and an n-by-m feature matrix")
      .def_property_readonly("node_count", &Graph::node_count)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def_property_readonly("feature_dim", &Graph::feature_dim)
      .def_property_readonly("edges",
                             [](const Graph& g) {
                               std::vector<std::pair<NodeId, NodeId>> out;
                               for (const Edge& e : g.edges())
                                 out.emplace_back(e.u, e.v);
                               return out;
                             })
      .def_property_readonly("features",
                             [](const Graph& g) { return g.features(); })
      .def_property_readonly("node_labels", &Graph::node_labels)
      .def("has_edge", &Graph::has_edge, py::arg("u"), py::arg("v"))
      .def("__repr__", [](const Graph& g) {
        return "Graph(nodes=" + std::to_string(g.node_count()) +
               ", edges=" + std::to_string(g.edge_count()) +
               ", features=" + std::to_string(g.feature_dim()) + ")";
      });

  m.def("load_graph", &load_graph, py::arg("edges_path"),
        py::arg("features_path"),
        "Read an edge-list file and a per-node feature CSV");
  m.def("generate_sbm", &generate_sbm, py::arg("block_sizes"), py::arg("p_in"),
        py::arg("p_out"), py::arg("feature_dim"), py::arg("seed"),
        "Stochastic block model with feature-separable communities");
  m.def(
      "explanation_support",
      [](const Graph& g, NodeId i, NodeId j) {
        return explanation_support(g, i, j);
      },
      py::arg("graph"), py::arg("i"), py::arg("j"),
      "Edge indices able to influence the similarity of the pair");

  py::class_<EncoderParams>(m, "EncoderParams")
      .def(py::init<>())
      .def_readwrite("theta1", &EncoderParams::theta1)
      .def_readwrite("theta2", &EncoderParams::theta2)
      .def_readwrite("theta2_logvar", &EncoderParams::theta2_logvar)
      .def_property(
          "trainer",
          [](const EncoderParams& p) { return trainer_name(p.trainer); },
          [](EncoderParams& p, const std::string& name) {
            p.trainer = trainer_from_name(name);
          })
      .def("__repr__", [](const EncoderParams& p) {
        return "EncoderParams(" + trainer_name(p.trainer) + ", " +
               std::to_string(p.input_dim()) + "->" +
               std::to_string(p.hidden_dim()) + "->" +
               std::to_string(p.embed_dim()) + ")";
      });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](const std::string& trainer, int hidden_dim,
                       int embed_dim, double learning_rate, int epochs,
                       double negative_ratio, double kl_weight,
                       std::uint64_t seed) {
             TrainConfig cfg;
             cfg.trainer = trainer_from_name(trainer);
             cfg.hidden_dim = hidden_dim;
             cfg.embed_dim = embed_dim;
             cfg.learning_rate = learning_rate;
             cfg.epochs = epochs;
             cfg.negative_ratio = negative_ratio;
             cfg.kl_weight = kl_weight;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("trainer") = "gae", py::arg("hidden_dim") = 32,
           py::arg("embed_dim") = 16, py::arg("learning_rate") = 0.01,
           py::arg("epochs") = 200, py::arg("negative_ratio") = 1.0,
           py::arg("kl_weight") = 1.0, py::arg("seed") = 1)
      .def_readwrite("hidden_dim", &TrainConfig::hidden_dim)
      .def_readwrite("embed_dim", &TrainConfig::embed_dim)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("negative_ratio", &TrainConfig::negative_ratio)
      .def_readwrite("kl_weight", &TrainConfig::kl_weight)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("loss_curve", &TrainReport::loss_curve)
      .def_readonly("final_loss", &TrainReport::final_loss)
      .def_readonly("wall_time_sec", &TrainReport::wall_time_sec)
      .def_readonly("diverged", &TrainReport::diverged);

  m.def(
      "train",
      [](const Graph& g, const TrainConfig& cfg) {
        auto [params, report] = train(g, cfg);
        return py::make_tuple(params, report);
      },
      py::arg("graph"), py::arg("config") = TrainConfig{},
      "Train an encoder; returns (params, report)");

  m.def(
      "encode",
      [](const Graph& g, const EncoderParams& p,
         const std::vector<double>& weights) {
        return encode(g, weights_from(g, weights), p);
      },
      py::arg("graph"), py::arg("params"),
      py::arg("weights") = std::vector<double>{},
      "Node embeddings; optional per-edge weights default to all ones");
  m.def("similarity", &similarity, py::arg("z"), py::arg("i"), py::arg("j"),
        "Cosine similarity of two embedding rows");

  py::class_<MiConfig>(m, "MiConfig")
      .def(py::init([](int steps, double learning_rate, double size_weight,
                       double entropy_weight, std::uint64_t seed) {
             MiConfig cfg;
             cfg.steps = steps;
             cfg.learning_rate = learning_rate;
             cfg.size_weight = size_weight;
             cfg.entropy_weight = entropy_weight;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("steps") = 300, py::arg("learning_rate") = 0.01,
           py::arg("size_weight") = 0.005, py::arg("entropy_weight") = 0.1,
           py::arg("seed") = 1)
      .def_readwrite("steps", &MiConfig::steps)
      .def_readwrite("learning_rate", &MiConfig::learning_rate)
      .def_readwrite("size_weight", &MiConfig::size_weight)
      .def_readwrite("entropy_weight", &MiConfig::entropy_weight)
      .def_readwrite("seed", &MiConfig::seed);

  py::class_<ExplanationMatrix>(m, "ExplanationMatrix")
      .def_readonly("i", &ExplanationMatrix::i)
      .def_readonly("j", &ExplanationMatrix::j)
      .def_readonly("edge_indices", &ExplanationMatrix::edge_indices)
      .def_readonly("values", &ExplanationMatrix::values)
      .def_readonly("score", &ExplanationMatrix::score)
      .def_readonly("threshold", &ExplanationMatrix::threshold)
      .def_readonly("method", &ExplanationMatrix::method)
      .def("__repr__", [](const ExplanationMatrix& m) {
        return "ExplanationMatrix(" + m.method + ", pair=(" +
               std::to_string(m.i) + ", " + std::to_string(m.j) +
               "), edges=" + std::to_string(m.edge_indices.size()) + ")";
      });

  m.def(
      "explain_gb1",
      [](const Graph& g, const EncoderParams& p, NodeId i, NodeId j) {
        return explain_gb1(g, p, i, j);
      },
      py::arg("graph"), py::arg("params"), py::arg("i"), py::arg("j"),
      "Raw score gradient per edge weight");
  m.def(
      "explain_gb2",
      [](const Graph& g, const EncoderParams& p, NodeId i, NodeId j,
         int steps) { return explain_gb2(g, p, i, j, steps); },
      py::arg("graph"), py::arg("params"), py::arg("i"), py::arg("j"),
      py::arg("steps") = 64, "Integrated gradients from the empty graph");
  m.def(
      "explain_mi",
      [](const Graph& g, const EncoderParams& p, NodeId i, NodeId j,
         const MiConfig& cfg) { return explain_mi(g, p, i, j, cfg); },
      py::arg("graph"), py::arg("params"), py::arg("i"), py::arg("j"),
      py::arg("config") = MiConfig{}, "Learned sigmoid edge mask");

  m.def("sample_pairs", &sample_pairs, py::arg("graph"), py::arg("count"),
        py::arg("seed"), "Uniform distinct node pairs");
  m.def("effect_overlap", &effect_overlap, py::arg("a_pos"), py::arg("a_neg"),
        py::arg("b_pos"), py::arg("b_neg"),
        "Generalized Jaccard overlap of sign-count tuples");

  py::class_<EvalOptions>(m, "EvalOptions")
      .def(py::init([](const std::string& method, int ig_steps,
                       const MiConfig& mi, double sparsity, bool soft_mask,
                       int jobs) {
             EvalOptions opts;
             opts.method = method_from_name(method);
             opts.ig_steps = ig_steps;
             opts.mi = mi;
             opts.sparsity = sparsity;
             opts.soft_mask = soft_mask;
             opts.jobs = jobs;
             return opts;
           }),
           py::arg("method") = "gb2", py::arg("ig_steps") = 64,
           py::arg("mi") = MiConfig{}, py::arg("sparsity") = 0.0,
           py::arg("soft_mask") = false, py::arg("jobs") = 1)
      .def_readwrite("ig_steps", &EvalOptions::ig_steps)
      .def_readwrite("sparsity", &EvalOptions::sparsity)
      .def_readwrite("jobs", &EvalOptions::jobs);

  py::class_<PairEvalRecord>(m, "PairEvalRecord")
      .def_readonly("i", &PairEvalRecord::i)
      .def_readonly("j", &PairEvalRecord::j)
      .def_readonly("score", &PairEvalRecord::score)
      .def_readonly("score_a", &PairEvalRecord::score_a)
      .def_readonly("score_b", &PairEvalRecord::score_b)
      .def_readonly("fid_a", &PairEvalRecord::fid_a)
      .def_readonly("fid_b", &PairEvalRecord::fid_b)
      .def_readonly("skipped", &PairEvalRecord::skipped)
      .def_readonly("skip_reason", &PairEvalRecord::skip_reason);

  py::class_<AggregateEval>(m, "AggregateEval")
      .def_readonly("fid_a_mean", &AggregateEval::fid_a_mean)
      .def_readonly("fid_b_mean", &AggregateEval::fid_b_mean)
      .def_readonly("a_pos", &AggregateEval::a_pos)
      .def_readonly("a_neg", &AggregateEval::a_neg)
      .def_readonly("b_pos", &AggregateEval::b_pos)
      .def_readonly("b_neg", &AggregateEval::b_neg)
      .def_readonly("eo", &AggregateEval::eo)
      .def_readonly("pairs_evaluated", &AggregateEval::pairs_evaluated)
      .def_readonly("pairs_skipped", &AggregateEval::pairs_skipped)
      .def("__repr__", [](const AggregateEval& a) {
        return "AggregateEval(fid_a=" + std::to_string(a.fid_a_mean) +
               ", fid_b=" + std::to_string(a.fid_b_mean) +
               ", eo=" + std::to_string(a.eo) + ")";
      });

  m.def(
      "evaluate",
      [](const Graph& g, const EncoderParams& p, const EvalOptions& opts,
         const std::vector<NodePair>& pairs, bool with_records) {
        ScoreModel model(g, p);
        std::vector<PairEvalRecord> records;
        const AggregateEval agg = evaluate_method(
            model, opts, pairs, with_records ? &records : nullptr);
        return py::make_tuple(agg, records);
      },
      py::arg("graph"), py::arg("params"), py::arg("options"), py::arg("pairs"),
      py::arg("with_records") = false,
      "Fidelity and effect overlap over the given pairs; returns "
      "(aggregate, records)");
}
