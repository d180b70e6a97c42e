// hyperkg: train / evaluate / analyze multi-relational KG embeddings in
// Euclidean space (MuRE) and the Poincare ball (MuRP).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "hyperkg/dataset.hpp"
#include "hyperkg/evaluator.hpp"
#include "hyperkg/model.hpp"
#include "hyperkg/trainer.hpp"

namespace fs = std::filesystem;
using namespace hyperkg;

namespace {

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

std::string format_double(double v, int precision = 10) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

std::string header_lines(const ConfigEcho& config) {
  std::ostringstream out;
  for (const auto& [k, v] : config) out << "# " << k << "=" << v << "\n";
  return out.str();
}

void echo_config(const ConfigEcho& config) {
  std::cout << header_lines(config);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failure: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// Expands `--config FILE` into the equivalent flags, inserted right after the
// subcommand so explicit command-line flags override them (every option takes
// the last value given).
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  size_t sub = 0;
  while (sub < args.size() && (args[sub].empty() || args[sub][0] == '-')) ++sub;
  if (sub >= args.size()) return args;

  std::string path;
  for (size_t i = sub + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::string> injected;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    injected.push_back("--" + trim(stripped.substr(0, eq)) + "=" +
                       trim(stripped.substr(eq + 1)));
  }

  std::vector<std::string> out(args.begin(), args.begin() + sub + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + sub + 1, args.end());
  return out;
}

uint64_t resolve_seed(const std::optional<uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device entropy;
  const uint64_t drawn =
      (static_cast<uint64_t>(entropy()) << 32) ^ entropy();
  std::cout << "# seed drawn from entropy: " << drawn << "\n";
  return drawn;
}

struct DatasetPaths {
  std::string train, valid, test;
};

DatasetPaths dataset_paths(const std::string& dir, bool need_eval_splits) {
  DatasetPaths paths;
  const fs::path base(dir);
  paths.train = (base / "train.txt").string();
  if (!fs::exists(paths.train))
    throw std::runtime_error("missing " + paths.train);
  const fs::path valid = base / "valid.txt";
  const fs::path test = base / "test.txt";
  if (fs::exists(valid)) paths.valid = valid.string();
  if (fs::exists(test)) paths.test = test.string();
  if (need_eval_splits && (paths.valid.empty() || paths.test.empty()))
    throw std::runtime_error("dataset directory " + dir +
                             " needs valid.txt and test.txt");
  return paths;
}

KnowledgeGraph load_dataset(const std::string& dir, bool need_eval_splits) {
  const DatasetPaths paths = dataset_paths(dir, need_eval_splits);
  KnowledgeGraph g = load_graph(paths.train, paths.valid, paths.test);
  for (const auto& w : g.warnings) std::cerr << "warning: " << w << "\n";
  return g;
}

std::vector<std::string> relation_vocab_with_reciprocals(
    const KnowledgeGraph& g) {
  std::vector<std::string> names = g.relation_names;
  names.reserve(2 * names.size());
  for (int32_t r = 0; r < g.num_relations(); ++r)
    names.push_back(g.relation_names[r] + "^-1");
  return names;
}

TieBreak parse_tie_break(const std::string& name) {
  if (name == "midrank") return TieBreak::midrank;
  if (name == "optimistic") return TieBreak::optimistic;
  if (name == "pessimistic") return TieBreak::pessimistic;
  throw std::runtime_error("unknown tie-break mode: " + name);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, out, trace;
  std::string geometry = "poincare";
  double curvature = 1.0;
  bool curvature_set = false;
  int32_t dim = 40;
  double lr = 50.0;
  int32_t batch = 128;
  int32_t negatives = 50;
  int32_t epochs = 100;
  int32_t eval_every = 10;
  std::optional<uint64_t> seed;
  double init_scale = 1e-3;
  int32_t threads = 1;
  bool tied_biases = false;
  int64_t train_mrr_sample = 0;
  std::string tie_break = "midrank";
};

int run_train(const TrainArgs& args) {
  if (args.geometry == "euclidean" && args.curvature_set)
    throw std::runtime_error("--c only applies to --geometry poincare");

  const uint64_t seed = resolve_seed(args.seed);
  TrainConfig cfg;
  cfg.geometry = args.geometry == "euclidean"
                     ? GeometryKind::Euclidean()
                     : GeometryKind::Poincare(args.curvature);
  cfg.dim = args.dim;
  cfg.learning_rate = args.lr;
  cfg.batch_size = args.batch;
  cfg.negatives = args.negatives;
  cfg.epochs = args.epochs;
  cfg.eval_every = args.eval_every;
  cfg.seed = seed;
  cfg.init_scale = args.init_scale;
  cfg.threads = args.threads;
  cfg.tied_biases = args.tied_biases;
  cfg.train_mrr_sample = args.train_mrr_sample;
  cfg.tie_break = parse_tie_break(args.tie_break);

  ConfigEcho echo{{"command", "train"},
                  {"data", args.data},
                  {"out", args.out},
                  {"geometry", args.geometry},
                  {"c", format_double(cfg.geometry.is_poincare()
                                          ? cfg.geometry.curvature
                                          : 0.0)},
                  {"dim", std::to_string(cfg.dim)},
                  {"lr", format_double(cfg.learning_rate)},
                  {"batch", std::to_string(cfg.batch_size)},
                  {"neg", std::to_string(cfg.negatives)},
                  {"epochs", std::to_string(cfg.epochs)},
                  {"eval-every", std::to_string(cfg.eval_every)},
                  {"seed", std::to_string(seed)},
                  {"init-scale", format_double(cfg.init_scale)},
                  {"threads", std::to_string(cfg.threads)},
                  {"tied-biases", cfg.tied_biases ? "true" : "false"},
                  {"train-mrr-sample", std::to_string(cfg.train_mrr_sample)},
                  {"tie-break", args.tie_break}};
  echo_config(echo);

  const KnowledgeGraph graph = load_dataset(args.data, false);
  std::cout << "# entities=" << graph.num_entities()
            << " relations=" << graph.num_relations()
            << " train=" << graph.train.size() << " valid=" << graph.valid.size()
            << " test=" << graph.test.size() << "\n";

  std::ostringstream trace;
  trace << header_lines(echo);
  trace << "epoch\tsplit\tmrr\thits@1\thits@3\thits@10\tmean_loss\n";
  const TrainResult result = train(graph, cfg, [&](const EpochMetrics& m) {
    std::ostringstream row;
    row << m.epoch << '\t' << m.split << '\t' << format_double(m.mrr) << '\t'
        << format_double(m.hits1) << '\t' << format_double(m.hits3) << '\t'
        << format_double(m.hits10) << '\t' << format_double(m.mean_loss);
    trace << row.str() << "\n";
    std::cout << row.str() << "\n";
  });

  Checkpoint ckpt;
  ckpt.params = result.params;
  ckpt.entity_names = graph.entity_names;
  ckpt.relation_names = relation_vocab_with_reciprocals(graph);
  save_checkpoint(args.out, ckpt);

  const std::string trace_path =
      args.trace.empty() ? args.out + ".trace.tsv" : args.trace;
  write_text_atomic(trace_path, trace.str());

  std::cout << "# checkpoint=" << args.out << "\n# trace=" << trace_path << "\n";
  if (!std::isnan(result.best_valid_mrr)) {
    std::cout << "# best_epoch=" << result.best_epoch
              << " best_valid_mrr=" << format_double(result.best_valid_mrr)
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, out;
  std::string split = "test";
  bool per_relation = false;
  std::string tie_break = "midrank";
  int32_t threads = 1;
};

int run_eval(const EvalArgs& args) {
  ConfigEcho echo{{"command", "eval"},
                  {"checkpoint", args.checkpoint},
                  {"data", args.data},
                  {"out", args.out},
                  {"split", args.split},
                  {"per-relation", args.per_relation ? "true" : "false"},
                  {"tie-break", args.tie_break},
                  {"threads", std::to_string(args.threads)}};
  echo_config(echo);

  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const KnowledgeGraph data = load_dataset(args.data, true);

  if (ckpt.params.n_relations % 2 != 0)
    throw std::runtime_error("checkpoint lacks reciprocal relations");
  const int32_t n_r_base = ckpt.params.n_relations / 2;

  std::unordered_map<std::string, int32_t> ent_ids, rel_ids;
  for (int32_t i = 0; i < ckpt.params.n_entities; ++i)
    ent_ids.emplace(ckpt.entity_names[i], i);
  for (int32_t i = 0; i < n_r_base; ++i)
    rel_ids.emplace(ckpt.relation_names[i], i);

  auto remap = [&](const std::vector<Triple>& in, const KnowledgeGraph& g) {
    std::vector<Triple> out;
    out.reserve(in.size());
    for (const Triple& t : in) {
      const auto s = ent_ids.find(g.entity_names[t.s]);
      if (s == ent_ids.end())
        throw std::runtime_error("unknown entity '" + g.entity_names[t.s] +
                                 "' not in checkpoint vocabulary");
      const auto o = ent_ids.find(g.entity_names[t.o]);
      if (o == ent_ids.end())
        throw std::runtime_error("unknown entity '" + g.entity_names[t.o] +
                                 "' not in checkpoint vocabulary");
      const auto r = rel_ids.find(g.relation_names[t.r]);
      if (r == rel_ids.end())
        throw std::runtime_error("unknown relation '" + g.relation_names[t.r] +
                                 "' not in checkpoint vocabulary");
      out.push_back({s->second, r->second, o->second});
    }
    return out;
  };
  const std::vector<Triple> train = remap(data.train, data);
  const std::vector<Triple> valid = remap(data.valid, data);
  const std::vector<Triple> test = remap(data.test, data);

  TruthIndex truth;
  for (const auto* split : {&train, &valid, &test}) {
    for (const Triple& t : *split) {
      truth.add(t.s, t.r, t.o);
      truth.add(t.o, t.r + n_r_base, t.s);
    }
  }
  truth.finalize();

  EvalOptions opts;
  opts.tie_break = parse_tie_break(args.tie_break);
  opts.threads = args.threads;
  const std::vector<Triple>& eval_split = args.split == "valid" ? valid : test;
  if (eval_split.empty())
    throw std::runtime_error("the " + args.split + " split is empty");
  const RankingReport report =
      evaluate(ckpt.params, eval_split, truth, n_r_base, opts);

  std::ostringstream out;
  out << header_lines(echo);
  out << "relation\tcount\tmrr\thits@1\thits@3\thits@10\n";
  auto row = [&](const std::string& name, int64_t count, double mrr, double h1,
                 double h3, double h10) {
    out << name << '\t' << count << '\t' << format_double(mrr) << '\t'
        << format_double(h1) << '\t' << format_double(h3) << '\t'
        << format_double(h10) << "\n";
  };
  row("ALL", static_cast<int64_t>(report.ranks.size()), report.mrr, report.hits1,
      report.hits3, report.hits10);
  if (args.per_relation) {
    for (const auto& m : report.per_relation)
      row(ckpt.relation_names[m.relation], m.count, m.mrr, m.hits1, m.hits3,
          m.hits10);
  }
  write_text_atomic(args.out, out.str());
  std::cout << "mrr=" << format_double(report.mrr)
            << " hits@1=" << format_double(report.hits1)
            << " hits@3=" << format_double(report.hits3)
            << " hits@10=" << format_double(report.hits10) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string data, out;
  double khs_threshold = 0.9;
  int64_t min_max_path = 2;
};

int run_analyze(const AnalyzeArgs& args) {
  ConfigEcho echo{{"command", "analyze"},
                  {"data", args.data},
                  {"out", args.out},
                  {"khs-threshold", format_double(args.khs_threshold)},
                  {"min-max-path", std::to_string(args.min_max_path)}};
  echo_config(echo);

  const KnowledgeGraph graph = load_dataset(args.data, false);
  const HierarchyReport report =
      classify_relations(graph, args.khs_threshold, args.min_max_path);

  std::ostringstream out;
  out << header_lines(echo);
  out << "relation\tnodes\tedges\tkhs\tmax_path\tavg_path\thierarchical\n";
  for (const auto& r : report.relations) {
    out << graph.relation_names[r.relation] << '\t' << r.node_count << '\t'
        << r.edge_count << '\t'
        << (r.khs ? format_double(*r.khs, 6) : std::string("-")) << '\t'
        << (r.max_path ? std::to_string(*r.max_path) : std::string("-")) << '\t'
        << (r.avg_path ? format_double(*r.avg_path, 6) : std::string("-")) << '\t'
        << (r.hierarchical ? "true" : "false") << "\n";
  }
  write_text_atomic(args.out, out.str());
  std::cout << "# report=" << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string data, out_dir;
  std::vector<double> proportions{100.0, 75.0, 50.0, 25.0};
  double khs_threshold = 0.9;
  int64_t min_max_path = 2;
  bool do_resplit = false;
  int64_t valid_size = 10000;
  int64_t test_size = 10000;
  std::optional<uint64_t> seed;
};

int run_split(const SplitArgs& args) {
  const uint64_t seed = resolve_seed(args.seed);
  std::ostringstream props;
  for (size_t i = 0; i < args.proportions.size(); ++i)
    props << (i ? "," : "") << args.proportions[i];
  ConfigEcho echo{{"command", "split"},
                  {"data", args.data},
                  {"out-dir", args.out_dir},
                  {"proportions", props.str()},
                  {"khs-threshold", format_double(args.khs_threshold)},
                  {"min-max-path", std::to_string(args.min_max_path)},
                  {"resplit", args.do_resplit ? "true" : "false"},
                  {"valid-size", std::to_string(args.valid_size)},
                  {"test-size", std::to_string(args.test_size)},
                  {"seed", std::to_string(seed)}};
  echo_config(echo);

  KnowledgeGraph graph = load_dataset(args.data, false);
  if (args.do_resplit)
    graph = resplit(graph, args.valid_size, args.test_size, seed);

  const HierarchyReport report =
      classify_relations(graph, args.khs_threshold, args.min_max_path);

  std::vector<double> fractions;
  for (double p : args.proportions) fractions.push_back(p / 100.0);
  const auto subsets = build_hier_subsets(graph, report, fractions, seed);

  std::ostringstream manifest;
  manifest << header_lines(echo);
  manifest << "subset\trelation\thierarchical\n";
  for (const auto& subset : subsets) {
    const std::string name =
        "h" + std::to_string(static_cast<int>(std::llround(subset.proportion * 100)));
    const fs::path dir = fs::path(args.out_dir) / name;
    fs::create_directories(dir);
    std::vector<std::string> header;
    for (const auto& [k, v] : echo) header.push_back(k + "=" + v);
    header.push_back("subset=" + name);
    write_triples((dir / "train.txt").string(), subset.graph, subset.graph.train,
                  header);
    write_triples((dir / "valid.txt").string(), subset.graph, subset.graph.valid,
                  header);
    write_triples((dir / "test.txt").string(), subset.graph, subset.graph.test,
                  header);
    for (int32_t r : subset.kept_relations) {
      manifest << name << '\t' << graph.relation_names[r] << '\t'
               << (report.relations[r].hierarchical ? "true" : "false") << "\n";
    }
    std::cout << "# wrote " << dir.string() << " (train=" << subset.graph.train.size()
              << " valid=" << subset.graph.valid.size()
              << " test=" << subset.graph.test.size() << ")\n";
  }
  write_text_atomic((fs::path(args.out_dir) / "manifest.tsv").string(),
                    manifest.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct Project2dArgs {
  std::string checkpoint, data, out;
  std::string subject, relation;
  std::vector<std::string> objects;
  std::string objects_file;
  int64_t sample = 0;
  std::optional<uint64_t> sample_seed;
};

int run_project2d(const Project2dArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelParams& params = ckpt.params;
  const int32_t n_r_base = params.n_relations / 2;

  std::unordered_map<std::string, int32_t> ent_ids, rel_ids;
  for (int32_t i = 0; i < params.n_entities; ++i)
    ent_ids.emplace(ckpt.entity_names[i], i);
  for (int32_t i = 0; i < n_r_base; ++i)
    rel_ids.emplace(ckpt.relation_names[i], i);

  const auto subject_it = ent_ids.find(args.subject);
  if (subject_it == ent_ids.end())
    throw std::runtime_error("unknown entity '" + args.subject + "'");
  const auto relation_it = rel_ids.find(args.relation);
  if (relation_it == rel_ids.end())
    throw std::runtime_error("unknown relation '" + args.relation + "'");
  const int32_t s = subject_it->second;
  const int32_t r = relation_it->second;

  // object list: explicit names, a file, or a uniform sample
  std::vector<int32_t> objects;
  uint64_t sample_seed = 0;
  auto add_object = [&](const std::string& name) {
    const auto it = ent_ids.find(name);
    if (it == ent_ids.end())
      throw std::runtime_error("unknown entity '" + name + "'");
    objects.push_back(it->second);
  };
  for (const auto& name : args.objects) add_object(name);
  if (!args.objects_file.empty()) {
    std::ifstream in(args.objects_file);
    if (!in) throw std::runtime_error("cannot open " + args.objects_file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) add_object(line);
    }
  }
  if (args.sample > 0) {
    sample_seed = resolve_seed(args.sample_seed);
    std::mt19937_64 rng(sample_seed);
    std::vector<int32_t> pool;
    for (int32_t e = 0; e < params.n_entities; ++e)
      if (e != s) pool.push_back(e);
    const size_t want = std::min<size_t>(args.sample, pool.size());
    for (size_t i = 0; i < want; ++i) {
      std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    objects.insert(objects.end(), pool.begin(), pool.begin() + want);
  }
  if (objects.empty())
    throw std::runtime_error("no object entities given (use --objects, "
                             "--objects-file or --sample)");

  ConfigEcho echo{{"command", "project2d"},
                  {"checkpoint", args.checkpoint},
                  {"data", args.data},
                  {"out", args.out},
                  {"subject", args.subject},
                  {"relation", args.relation},
                  {"objects", std::to_string(objects.size())},
                  {"sample-seed",
                   args.sample > 0 ? std::to_string(sample_seed) : "-"}};
  echo_config(echo);

  // truth for TP/FP/TN/FN at sigma(phi) >= 0.5
  const KnowledgeGraph data = load_dataset(args.data, false);
  TruthIndex truth;
  for (const auto* split : {&data.train, &data.valid, &data.test})
    for (const Triple& t : *split) truth.add(t.s, t.r, t.o);
  truth.finalize();
  const auto data_rel = data.relation_ids.find(args.relation);
  const auto data_subj = data.entity_ids.find(args.subject);

  const int32_t dim = params.dim;
  const auto subject_raw = params.entity(s);
  std::vector<double> subject_transformed(dim);
  if (params.geometry.is_poincare()) {
    mobius_matvec(params.diag(r), subject_raw, params.geometry.ball(),
                  subject_transformed);
  } else {
    for (int32_t i = 0; i < dim; ++i)
      subject_transformed[i] = params.diag(r)[i] * subject_raw[i];
  }
  if (norm(subject_raw) < kEpsZero || norm(subject_transformed) < kEpsZero)
    throw std::runtime_error(
        "subject embedding has zero norm; the projection is undefined");

  auto project = [&](std::span<const double> axis, std::span<const double> point,
                     double& x, double& y) {
    const double axis_norm = norm(axis);
    x = dot(axis, point) / axis_norm;
    const double rest = norm_sq(point) - x * x;
    y = std::sqrt(std::max(0.0, rest));
  };

  std::ostringstream out;
  out << header_lines(echo);
  out << "entity\tstage\tx\ty\tclass\n";
  auto emit = [&](const std::string& name, const std::string& stage, double x,
                  double y, const std::string& cls) {
    out << name << '\t' << stage << '\t' << format_double(x, 12) << '\t'
        << format_double(y, 12) << '\t' << cls << "\n";
  };
  emit(args.subject, "before", norm(subject_raw), 0.0, "subject");
  emit(args.subject, "after", norm(subject_transformed), 0.0, "subject");

  std::vector<double> transformed(dim);
  for (int32_t o : objects) {
    const auto object_raw = params.entity(o);
    if (params.geometry.is_poincare()) {
      mobius_add(object_raw, params.trans(r), params.geometry.ball(), transformed);
    } else {
      for (int32_t i = 0; i < dim; ++i)
        transformed[i] = object_raw[i] + params.trans(r)[i];
    }
    const bool predicted = score(params, s, r, o) >= 0.0;  // sigma(phi) >= 0.5
    bool actual = false;
    if (data_rel != data.relation_ids.end() && data_subj != data.entity_ids.end()) {
      const auto data_obj = data.entity_ids.find(ckpt.entity_names[o]);
      if (data_obj != data.entity_ids.end())
        actual = truth.contains(data_subj->second, data_rel->second,
                                data_obj->second);
    }
    const std::string cls = predicted ? (actual ? "TP" : "FP")
                                      : (actual ? "FN" : "TN");
    double x, y;
    project(subject_raw, object_raw, x, y);
    emit(ckpt.entity_names[o], "before", x, y, cls);
    project(subject_transformed, transformed, x, y);
    emit(ckpt.entity_names[o], "after", x, y, cls);
  }
  write_text_atomic(args.out, out.str());
  std::cout << "# plot_data=" << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BiasNormsArgs {
  std::string checkpoint, out;
};

int run_bias_norms(const BiasNormsArgs& args) {
  ConfigEcho echo{{"command", "bias-norms"},
                  {"checkpoint", args.checkpoint},
                  {"out", args.out}};
  echo_config(echo);

  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelParams& params = ckpt.params;

  std::ostringstream out;
  out << header_lines(echo);
  out << "entity\tnorm\tbias_subject\tbias_object\n";
  std::vector<double> norms(params.n_entities);
  for (int32_t e = 0; e < params.n_entities; ++e) {
    norms[e] = norm(params.entity(e));
    out << ckpt.entity_names[e] << '\t' << format_double(norms[e], 12) << '\t'
        << format_double(params.bias_subject[e], 12) << '\t'
        << format_double(params.bias_object[e], 12) << "\n";
  }

  // sample Pearson correlation between norms and subject biases
  const double n = static_cast<double>(params.n_entities);
  double mean_x = 0, mean_y = 0;
  for (int32_t e = 0; e < params.n_entities; ++e) {
    mean_x += norms[e];
    mean_y += params.bias_subject[e];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (int32_t e = 0; e < params.n_entities; ++e) {
    const double dx = norms[e] - mean_x;
    const double dy = params.bias_subject[e] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx > 0 && syy > 0) {
    out << "# pearson_norm_bias_subject="
        << format_double(sxy / std::sqrt(sxx * syy)) << "\n";
  } else {
    out << "# pearson_norm_bias_subject=undefined\n";
  }
  write_text_atomic(args.out, out.str());
  std::cout << "# plot_data=" << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-relational knowledge graph embeddings in Euclidean and "
               "Poincare-ball geometry"};
  app.require_subcommand(1);
  std::string config_file;

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset directory");
  train_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  train_cmd->add_option("--data", train_args.data, "dataset directory with train/valid/test .txt")->required();
  train_cmd->add_option("--out", train_args.out, "checkpoint output path")->required();
  train_cmd->add_option("--trace", train_args.trace, "metrics trace output (default: <out>.trace.tsv)");
  train_cmd->add_option("--geometry", train_args.geometry, "euclidean | poincare")
      ->check(CLI::IsMember({"euclidean", "poincare"}))
      ->capture_default_str();
  train_cmd->add_option("--c", train_args.curvature, "ball curvature (poincare only)")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--dim", train_args.dim, "embedding dimensionality")->capture_default_str();
  train_cmd->add_option("--lr", train_args.lr, "learning rate (50 suits WN18RR-like data, 10 FB15k-237-like)")->capture_default_str();
  train_cmd->add_option("--batch", train_args.batch, "batch size")->capture_default_str();
  train_cmd->add_option("--neg", train_args.negatives, "negative samples per positive")->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--eval-every", train_args.eval_every, "epochs between metric evaluations")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "RNG seed (drawn from entropy and printed when omitted)");
  train_cmd->add_option("--init-scale", train_args.init_scale, "uniform init half-width")->capture_default_str();
  train_cmd->add_option("--threads", train_args.threads, "gradient worker threads")->capture_default_str();
  train_cmd->add_flag("--tied-biases", train_args.tied_biases, "one bias per entity instead of subject/object pairs");
  train_cmd->add_option("--train-mrr-sample", train_args.train_mrr_sample, "cap on train triples scored in the trace (0 = all)")->capture_default_str();
  train_cmd->add_option("--tie-break", train_args.tie_break, "midrank | optimistic | pessimistic")
      ->check(CLI::IsMember({"midrank", "optimistic", "pessimistic"}))
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (filtered ranking)");
  eval_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_args.out, "report output path")->required();
  eval_cmd->add_option("--split", eval_args.split, "split to rank: test | valid")
      ->check(CLI::IsMember({"test", "valid"}))
      ->capture_default_str();
  eval_cmd->add_flag("--per-relation", eval_args.per_relation, "add one row per base relation");
  eval_cmd->add_option("--tie-break", eval_args.tie_break, "midrank | optimistic | pessimistic")
      ->check(CLI::IsMember({"midrank", "optimistic", "pessimistic"}))
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval_args.threads, "ranking worker threads")->capture_default_str();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Per-relation hierarchy analytics");
  analyze_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  analyze_cmd->add_option("--data", analyze_args.data, "dataset directory")->required();
  analyze_cmd->add_option("--out", analyze_args.out, "report output path")->required();
  analyze_cmd->add_option("--khs-threshold", analyze_args.khs_threshold, "hierarchy khs threshold")->capture_default_str();
  analyze_cmd->add_option("--min-max-path", analyze_args.min_max_path, "hierarchy max-path threshold")->capture_default_str();

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "Build hierarchical-proportion dataset subsets");
  split_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  split_cmd->add_option("--data", split_args.data, "dataset directory")->required();
  split_cmd->add_option("--out-dir", split_args.out_dir, "output directory for the subsets")->required();
  split_cmd->add_option("--proportions", split_args.proportions, "hierarchical-relation percentages")
      ->delimiter(',')
      ->capture_default_str();
  split_cmd->add_option("--khs-threshold", split_args.khs_threshold, "hierarchy khs threshold")->capture_default_str();
  split_cmd->add_option("--min-max-path", split_args.min_max_path, "hierarchy max-path threshold")->capture_default_str();
  split_cmd->add_flag("--resplit", split_args.do_resplit, "redraw valid/test from the pooled triples first");
  split_cmd->add_option("--valid-size", split_args.valid_size, "resplit validation size")->capture_default_str();
  split_cmd->add_option("--test-size", split_args.test_size, "resplit test size")->capture_default_str();
  split_cmd->add_option("--seed", split_args.seed, "RNG seed (drawn from entropy and printed when omitted)");

  Project2dArgs project_args;
  auto* project_cmd = app.add_subcommand("project2d", "Project embeddings to 2D relative to a subject entity");
  project_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  project_cmd->add_option("--checkpoint", project_args.checkpoint, "checkpoint path")->required();
  project_cmd->add_option("--data", project_args.data, "dataset directory (ground truth for TP/FP/TN/FN)")->required();
  project_cmd->add_option("--out", project_args.out, "plot data output path")->required();
  project_cmd->add_option("--subject", project_args.subject, "subject entity name")->required();
  project_cmd->add_option("--relation", project_args.relation, "relation name")->required();
  project_cmd->add_option("--objects", project_args.objects, "object entity names")->delimiter(',');
  project_cmd->add_option("--objects-file", project_args.objects_file, "file with one object entity per line");
  project_cmd->add_option("--sample", project_args.sample, "number of random object entities");
  project_cmd->add_option("--sample-seed", project_args.sample_seed, "seed for --sample");

  BiasNormsArgs bias_args;
  auto* bias_cmd = app.add_subcommand("bias-norms", "Per-entity embedding norm and bias table");
  bias_cmd->add_option("--config", config_file, "key=value config file; command-line flags override it");
  bias_cmd->add_option("--checkpoint", bias_args.checkpoint, "checkpoint path")->required();
  bias_cmd->add_option("--out", bias_args.out, "plot data output path")->required();

  // last value wins, so config-file entries injected ahead of the explicit
  // command line are overridden by it
  for (auto* cmd : {train_cmd, eval_cmd, analyze_cmd, split_cmd, project_cmd,
                    bias_cmd}) {
    for (CLI::Option* opt : cmd->get_options())
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    train_args.curvature_set = train_cmd->count("--c") > 0;
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (analyze_cmd->parsed()) return run_analyze(analyze_args);
    if (split_cmd->parsed()) return run_split(split_args);
    if (project_cmd->parsed()) return run_project2d(project_args);
    if (bias_cmd->parsed()) return run_bias_norms(bias_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
