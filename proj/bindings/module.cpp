#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hyperkg/dataset.hpp"
#include "hyperkg/evaluator.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/trainer.hpp"

namespace py = pybind11;
using namespace hyperkg;

namespace {

using Vec = std::vector<double>;

Vec run_binary(void (*op)(std::span<const double>, std::span<const double>,
                          Curvature, std::span<double>),
               const Vec& a, const Vec& b, double c) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  Vec out(a.size());
  op(a, b, Curvature(c), out);
  return out;
}

TieBreak tie_from_string(const std::string& name) {
  if (name == "midrank") return TieBreak::midrank;
  if (name == "optimistic") return TieBreak::optimistic;
  if (name == "pessimistic") return TieBreak::pessimistic;
  throw std::invalid_argument("unknown tie-break mode: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-relational knowledge graph embeddings in Euclidean and "
            "Poincare-ball geometry";

  // ---- geometry -----------------------------------------------------------
  m.def("conformal_factor",
        [](const Vec& x, double c) { return conformal_factor(x, Curvature(c)); },
        py::arg("x"), py::arg("c"));
  m.def("mobius_add",
        [](const Vec& x, const Vec& y, double c) {
          return run_binary(&mobius_add, x, y, c);
        },
        py::arg("x"), py::arg("y"), py::arg("c"));
  m.def("poincare_distance",
        [](const Vec& x, const Vec& y, double c) {
          return poincare_distance(x, y, Curvature(c));
        },
        py::arg("x"), py::arg("y"), py::arg("c"));
  m.def("exp_map",
        [](const Vec& x, const Vec& v, double c) {
          return run_binary(&exp_map, x, v, c);
        },
        py::arg("x"), py::arg("v"), py::arg("c"));
  m.def("log_map",
        [](const Vec& x, const Vec& y, double c) {
          return run_binary(&log_map, x, y, c);
        },
        py::arg("x"), py::arg("y"), py::arg("c"));
  m.def("mobius_matvec",
        [](const Vec& diag, const Vec& x, double c) {
          return run_binary(&mobius_matvec, diag, x, c);
        },
        py::arg("diag"), py::arg("x"), py::arg("c"));
  m.def("riemannian_scale",
        [](const Vec& grad, const Vec& x, double c) {
          return run_binary(&riemannian_scale, grad, x, c);
        },
        py::arg("grad"), py::arg("x"), py::arg("c"));
  m.def("project_to_ball", [](Vec x, double c) {
    project_to_ball(x, Curvature(c));
    return x;
  });

  // ---- dataset ------------------------------------------------------------
  py::class_<Triple>(m, "Triple")
      .def(py::init<>())
      .def(py::init([](int32_t s, int32_t r, int32_t o) {
             return Triple{s, r, o};
           }),
           py::arg("s"), py::arg("r"), py::arg("o"))
      .def_readwrite("s", &Triple::s)
      .def_readwrite("r", &Triple::r)
      .def_readwrite("o", &Triple::o)
      .def("__eq__", [](const Triple& a, const Triple& b) { return a == b; })
      .def("__repr__", [](const Triple& t) {
        return "Triple(" + std::to_string(t.s) + ", " + std::to_string(t.r) +
               ", " + std::to_string(t.o) + ")";
      });

  py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
      .def_readonly("entity_names", &KnowledgeGraph::entity_names)
      .def_readonly("relation_names", &KnowledgeGraph::relation_names)
      .def_readonly("train", &KnowledgeGraph::train)
      .def_readonly("valid", &KnowledgeGraph::valid)
      .def_readonly("test", &KnowledgeGraph::test)
      .def_readonly("warnings", &KnowledgeGraph::warnings)
      .def_property_readonly("num_entities", &KnowledgeGraph::num_entities)
      .def_property_readonly("num_relations", &KnowledgeGraph::num_relations);

  m.def("load_graph", &load_graph, py::arg("train_path"),
        py::arg("valid_path") = "", py::arg("test_path") = "");
  m.def("graph_from_triples", &graph_from_triples, py::arg("entity_names"),
        py::arg("relation_names"), py::arg("train"), py::arg("valid"),
        py::arg("test"));
  m.def("resplit", &resplit, py::arg("graph"), py::arg("valid_size"),
        py::arg("test_size"), py::arg("seed"));

  m.def("khs",
        [](int32_t n, const std::vector<std::pair<int32_t, int32_t>>& edges) {
          return khs(make_digraph(n, edges));
        },
        py::arg("n"), py::arg("edges"));
  m.def("path_stats",
        [](int32_t n, const std::vector<std::pair<int32_t, int32_t>>& edges) {
          const PathStats s = path_stats(make_digraph(n, edges));
          return py::make_tuple(s.max_path, s.avg_path);
        },
        py::arg("n"), py::arg("edges"));

  py::class_<RelationHierarchy>(m, "RelationHierarchy")
      .def_readonly("relation", &RelationHierarchy::relation)
      .def_readonly("node_count", &RelationHierarchy::node_count)
      .def_readonly("edge_count", &RelationHierarchy::edge_count)
      .def_readonly("khs", &RelationHierarchy::khs)
      .def_readonly("max_path", &RelationHierarchy::max_path)
      .def_readonly("avg_path", &RelationHierarchy::avg_path)
      .def_readonly("hierarchical", &RelationHierarchy::hierarchical)
      .def_readonly("note", &RelationHierarchy::note);

  py::class_<HierarchyReport>(m, "HierarchyReport")
      .def_readonly("khs_threshold", &HierarchyReport::khs_threshold)
      .def_readonly("min_max_path", &HierarchyReport::min_max_path)
      .def_readonly("relations", &HierarchyReport::relations);

  m.def("classify_relations", &classify_relations, py::arg("graph"),
        py::arg("khs_threshold") = 0.9, py::arg("min_max_path") = 2);

  // ---- model --------------------------------------------------------------
  py::class_<GeometryKind>(m, "GeometryKind")
      .def_static("euclidean", &GeometryKind::Euclidean)
      .def_static("poincare", &GeometryKind::Poincare, py::arg("c"))
      .def_property_readonly("is_poincare", &GeometryKind::is_poincare)
      .def_readonly("curvature", &GeometryKind::curvature);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("geometry", &ModelParams::geometry)
      .def_readonly("n_entities", &ModelParams::n_entities)
      .def_readonly("n_relations", &ModelParams::n_relations)
      .def_readonly("dim", &ModelParams::dim)
      .def_readonly("entity_emb", &ModelParams::entity_emb)
      .def_readonly("rel_diag", &ModelParams::rel_diag)
      .def_readonly("rel_trans", &ModelParams::rel_trans)
      .def_readonly("bias_subject", &ModelParams::bias_subject)
      .def_readonly("bias_object", &ModelParams::bias_object);

  m.def("score", &score, py::arg("params"), py::arg("s"), py::arg("r"),
        py::arg("o"));
  m.def("sigmoid", &sigmoid, py::arg("x"));

  py::class_<Checkpoint>(m, "Checkpoint")
      .def(py::init([](const ModelParams& params,
                       const std::vector<std::string>& entity_names,
                       const std::vector<std::string>& relation_names) {
             return Checkpoint{params, entity_names, relation_names};
           }),
           py::arg("params"), py::arg("entity_names"), py::arg("relation_names"))
      .def_readonly("params", &Checkpoint::params)
      .def_readonly("entity_names", &Checkpoint::entity_names)
      .def_readonly("relation_names", &Checkpoint::relation_names);
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("checkpoint"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  // ---- trainer ------------------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("geometry", &TrainConfig::geometry)
      .def_readwrite("dim", &TrainConfig::dim)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("negatives", &TrainConfig::negatives)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("init_scale", &TrainConfig::init_scale)
      .def_readwrite("threads", &TrainConfig::threads)
      .def_readwrite("tied_biases", &TrainConfig::tied_biases)
      .def_readwrite("train_mrr_sample", &TrainConfig::train_mrr_sample);

  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("split", &EpochMetrics::split)
      .def_readonly("mrr", &EpochMetrics::mrr)
      .def_readonly("hits1", &EpochMetrics::hits1)
      .def_readonly("hits3", &EpochMetrics::hits3)
      .def_readonly("hits10", &EpochMetrics::hits10)
      .def_readonly("mean_loss", &EpochMetrics::mean_loss);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("best_epoch", &TrainResult::best_epoch)
      .def_readonly("best_valid_mrr", &TrainResult::best_valid_mrr)
      .def_readonly("trace", &TrainResult::trace);

  m.def("train",
        [](const KnowledgeGraph& graph, const TrainConfig& config,
           const std::function<void(const EpochMetrics&)>& on_metrics) {
          return train(graph, config, on_metrics);
        },
        py::arg("graph"), py::arg("config"),
        py::arg("on_metrics") = std::function<void(const EpochMetrics&)>(),
        py::call_guard<py::gil_scoped_release>());
  m.def("augment_reciprocal",
        [](const std::vector<Triple>& triples, int32_t n_r_base) {
          return augment_reciprocal(triples, n_r_base);
        },
        py::arg("triples"), py::arg("n_r_base"));

  // ---- evaluator ----------------------------------------------------------
  py::class_<TruthIndex>(m, "TruthIndex")
      .def_static("from_graph", &TruthIndex::from_graph, py::arg("graph"),
                  py::arg("n_r_base"))
      .def("contains", &TruthIndex::contains, py::arg("s"), py::arg("r"),
           py::arg("o"));

  py::class_<RelationMetrics>(m, "RelationMetrics")
      .def_readonly("relation", &RelationMetrics::relation)
      .def_readonly("count", &RelationMetrics::count)
      .def_readonly("mrr", &RelationMetrics::mrr)
      .def_readonly("hits1", &RelationMetrics::hits1)
      .def_readonly("hits3", &RelationMetrics::hits3)
      .def_readonly("hits10", &RelationMetrics::hits10);

  py::class_<RankingReport>(m, "RankingReport")
      .def_readonly("ranks", &RankingReport::ranks)
      .def_readonly("mrr", &RankingReport::mrr)
      .def_readonly("hits1", &RankingReport::hits1)
      .def_readonly("hits3", &RankingReport::hits3)
      .def_readonly("hits10", &RankingReport::hits10)
      .def_readonly("per_relation", &RankingReport::per_relation);

  m.def("rank_triple",
        [](const ModelParams& params, const Triple& test, const TruthIndex& truth,
           const std::string& tie_break) {
          EvalOptions opts;
          opts.tie_break = tie_from_string(tie_break);
          return rank_triple(params, test, truth, opts);
        },
        py::arg("params"), py::arg("test"), py::arg("truth"),
        py::arg("tie_break") = "midrank");
  m.def("evaluate",
        [](const ModelParams& params, const std::vector<Triple>& test,
           const TruthIndex& truth, int32_t n_r_base, const std::string& tie_break) {
          EvalOptions opts;
          opts.tie_break = tie_from_string(tie_break);
          return evaluate(params, test, truth, n_r_base, opts);
        },
        py::arg("params"), py::arg("test"), py::arg("truth"), py::arg("n_r_base"),
        py::arg("tie_break") = "midrank",
        py::call_guard<py::gil_scoped_release>());
}
