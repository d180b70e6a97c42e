#include "hyperkg/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace hyperkg {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

size_t TripleHash::operator()(const Triple& t) const {
  uint64_t h = mix64(static_cast<uint64_t>(static_cast<uint32_t>(t.s)));
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(t.r)));
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(t.o)));
  return static_cast<size_t>(h);
}

std::vector<Triple> KnowledgeGraph::all_triples() const {
  std::vector<Triple> out;
  out.reserve(train.size() + valid.size() + test.size());
  out.insert(out.end(), train.begin(), train.end());
  out.insert(out.end(), valid.begin(), valid.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

namespace {

int32_t intern(std::unordered_map<std::string, int32_t>& ids,
               std::vector<std::string>& names, const std::string& symbol) {
  auto it = ids.find(symbol);
  if (it != ids.end()) return it->second;
  const int32_t id = static_cast<int32_t>(names.size());
  names.push_back(symbol);
  ids.emplace(symbol, id);
  return id;
}

void load_split(KnowledgeGraph& g, const std::string& path,
                std::vector<Triple>& out, int32_t train_entities,
                int32_t train_relations, bool is_train) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triple file: " + path);
  const std::string file = std::filesystem::path(path).filename().string();
  std::unordered_set<Triple, TripleHash> seen;
  std::unordered_set<int32_t> reported_entities, reported_relations;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;  // header comments
    std::array<std::string, 3> fields;
    size_t start = 0, field = 0;
    bool malformed = false;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '\t') {
        if (field >= 3) {
          malformed = true;
          break;
        }
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (malformed || field != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw std::runtime_error(file + ":" + std::to_string(line_no) +
                               ": expected 3 tab-separated fields");
    }
    Triple t;
    t.s = intern(g.entity_ids, g.entity_names, fields[0]);
    t.r = intern(g.relation_ids, g.relation_names, fields[1]);
    t.o = intern(g.entity_ids, g.entity_names, fields[2]);
    if (!is_train) {
      for (int32_t e : {t.s, t.o}) {
        if (e >= train_entities && reported_entities.insert(e).second) {
          g.warnings.push_back(file + ":" + std::to_string(line_no) +
                               ": entity '" + g.entity_names[e] +
                               "' not present in training set");
        }
      }
      if (t.r >= train_relations && reported_relations.insert(t.r).second) {
        g.warnings.push_back(file + ":" + std::to_string(line_no) +
                             ": relation '" + g.relation_names[t.r] +
                             "' not present in training set");
      }
    }
    if (!seen.insert(t).second) {
      g.warnings.push_back(file + ":" + std::to_string(line_no) +
                           ": duplicate triple skipped");
      continue;
    }
    out.push_back(t);
  }
}

}  // namespace

KnowledgeGraph load_graph(const std::string& train_path,
                          const std::string& valid_path,
                          const std::string& test_path) {
  KnowledgeGraph g;
  load_split(g, train_path, g.train, 0, 0, true);
  if (g.train.empty()) throw std::runtime_error("empty training set: " + train_path);
  const int32_t train_entities = g.num_entities();
  const int32_t train_relations = g.num_relations();
  if (!valid_path.empty())
    load_split(g, valid_path, g.valid, train_entities, train_relations, false);
  if (!test_path.empty())
    load_split(g, test_path, g.test, train_entities, train_relations, false);
  return g;
}

KnowledgeGraph graph_from_triples(std::vector<std::string> entity_names,
                                  std::vector<std::string> relation_names,
                                  std::vector<Triple> train,
                                  std::vector<Triple> valid,
                                  std::vector<Triple> test) {
  KnowledgeGraph g;
  g.entity_names = std::move(entity_names);
  g.relation_names = std::move(relation_names);
  for (int32_t i = 0; i < g.num_entities(); ++i) g.entity_ids[g.entity_names[i]] = i;
  for (int32_t i = 0; i < g.num_relations(); ++i) g.relation_ids[g.relation_names[i]] = i;
  g.train = std::move(train);
  g.valid = std::move(valid);
  g.test = std::move(test);
  for (const auto* split : {&g.train, &g.valid, &g.test}) {
    for (const Triple& t : *split) {
      if (t.s < 0 || t.s >= g.num_entities() || t.o < 0 || t.o >= g.num_entities() ||
          t.r < 0 || t.r >= g.num_relations())
        throw std::invalid_argument("triple id outside vocabulary");
    }
  }
  return g;
}

void write_triples(const std::string& path, const KnowledgeGraph& graph,
                   std::span<const Triple> triples,
                   const std::vector<std::string>& header_comments) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write: " + tmp);
    for (const auto& c : header_comments) out << "# " << c << "\n";
    for (const Triple& t : triples) {
      out << graph.entity_names[t.s] << '\t' << graph.relation_names[t.r] << '\t'
          << graph.entity_names[t.o] << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------

Digraph make_digraph(int32_t n, std::span<const std::pair<int32_t, int32_t>> edges) {
  Digraph g;
  g.n = n;
  g.adj.assign(n, {});
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("edge endpoint outside node range");
    g.adj[u].push_back(v);
  }
  for (auto& nbrs : g.adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

Digraph relation_digraph(const KnowledgeGraph& graph, int32_t relation) {
  std::unordered_map<int32_t, int32_t> local;
  std::vector<std::pair<int32_t, int32_t>> edges;
  auto local_id = [&](int32_t e) {
    auto it = local.find(e);
    if (it != local.end()) return it->second;
    const int32_t id = static_cast<int32_t>(local.size());
    local.emplace(e, id);
    return id;
  };
  for (const Triple& t : graph.train) {
    if (t.r != relation) continue;
    edges.emplace_back(local_id(t.s), local_id(t.o));
  }
  return make_digraph(static_cast<int32_t>(local.size()), edges);
}

namespace {

struct ReachSummary {
  int64_t reachable_pairs = 0;  // ordered, i != j
  int64_t mutual_pairs = 0;     // ordered pairs inside one SCC
  int64_t path_sum = 0;
  int64_t path_max = 0;
};

// BFS from every node for shortest-path stats plus Kosaraju SCCs for the
// count of mutually reachable pairs. Avoids materializing the full
// reachability matrix.
ReachSummary summarize_reachability(const Digraph& g) {
  ReachSummary s;
  const int32_t n = g.n;
  std::vector<int32_t> stamp(n, -1);
  std::vector<int32_t> dist(n, 0);
  std::vector<int32_t> queue(n);
  for (int32_t src = 0; src < n; ++src) {
    int32_t head = 0, tail = 0;
    stamp[src] = src;
    for (int32_t v : g.adj[src]) {
      if (stamp[v] == src) continue;
      stamp[v] = src;
      dist[v] = 1;
      queue[tail++] = v;
    }
    while (head < tail) {
      const int32_t u = queue[head++];
      for (int32_t v : g.adj[u]) {
        if (stamp[v] == src) continue;
        stamp[v] = src;
        dist[v] = dist[u] + 1;
        queue[tail++] = v;
      }
    }
    for (int32_t i = 0; i < tail; ++i) {
      const int32_t v = queue[i];
      if (v == src) continue;  // src re-reached via a cycle: off-diagonal only
      ++s.reachable_pairs;
      s.path_sum += dist[v];
      s.path_max = std::max<int64_t>(s.path_max, dist[v]);
    }
  }

  // Kosaraju: order by finish time on g, then sweep the reverse graph.
  std::vector<int32_t> order;
  order.reserve(n);
  {
    std::vector<int8_t> visited(n, 0);
    std::vector<std::pair<int32_t, size_t>> stack;
    for (int32_t s0 = 0; s0 < n; ++s0) {
      if (visited[s0]) continue;
      visited[s0] = 1;
      stack.emplace_back(s0, 0);
      while (!stack.empty()) {
        auto& [u, idx] = stack.back();
        if (idx < g.adj[u].size()) {
          const int32_t v = g.adj[u][idx++];
          if (!visited[v]) {
            visited[v] = 1;
            stack.emplace_back(v, 0);
          }
        } else {
          order.push_back(u);
          stack.pop_back();
        }
      }
    }
  }
  std::vector<std::vector<int32_t>> radj(n);
  for (int32_t u = 0; u < n; ++u)
    for (int32_t v : g.adj[u]) radj[v].push_back(u);
  {
    std::vector<int8_t> visited(n, 0);
    std::vector<int32_t> stack;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (visited[*it]) continue;
      int64_t size = 0;
      visited[*it] = 1;
      stack.push_back(*it);
      while (!stack.empty()) {
        const int32_t u = stack.back();
        stack.pop_back();
        ++size;
        for (int32_t v : radj[u]) {
          if (!visited[v]) {
            visited[v] = 1;
            stack.push_back(v);
          }
        }
      }
      s.mutual_pairs += size * (size - 1);
    }
  }
  return s;
}

}  // namespace

std::optional<double> khs(const Digraph& graph) {
  const ReachSummary s = summarize_reachability(graph);
  if (s.reachable_pairs == 0) return std::nullopt;
  return static_cast<double>(s.reachable_pairs - s.mutual_pairs) /
         static_cast<double>(s.reachable_pairs);
}

PathStats path_stats(const Digraph& graph) {
  const ReachSummary s = summarize_reachability(graph);
  PathStats out;
  if (s.reachable_pairs > 0) {
    out.max_path = s.path_max;
    out.avg_path = static_cast<double>(s.path_sum) / static_cast<double>(s.reachable_pairs);
  }
  return out;
}

HierarchyReport classify_relations(const KnowledgeGraph& graph,
                                   double khs_threshold, int64_t min_max_path) {
  HierarchyReport report;
  report.khs_threshold = khs_threshold;
  report.min_max_path = min_max_path;
  for (int32_t r = 0; r < graph.num_relations(); ++r) {
    const Digraph g = relation_digraph(graph, r);
    RelationHierarchy row;
    row.relation = r;
    row.node_count = g.n;
    for (const auto& nbrs : g.adj) row.edge_count += static_cast<int64_t>(nbrs.size());
    const ReachSummary s = summarize_reachability(g);
    if (s.reachable_pairs > 0) {
      row.khs = static_cast<double>(s.reachable_pairs - s.mutual_pairs) /
                static_cast<double>(s.reachable_pairs);
      row.max_path = s.path_max;
      row.avg_path = static_cast<double>(s.path_sum) /
                     static_cast<double>(s.reachable_pairs);
      row.hierarchical =
          *row.khs >= khs_threshold && *row.max_path >= min_max_path;
    } else {
      row.note = "no reachable node pairs";
      row.hierarchical = false;
    }
    report.relations.push_back(std::move(row));
  }
  return report;
}

namespace {

KnowledgeGraph project_relations(const KnowledgeGraph& graph,
                                 const std::vector<int32_t>& kept) {
  std::vector<int8_t> keep(graph.num_relations(), 0);
  for (int32_t r : kept) keep[r] = 1;
  KnowledgeGraph out;
  auto map_triples = [&](const std::vector<Triple>& in, std::vector<Triple>& dst) {
    for (const Triple& t : in) {
      if (!keep[t.r]) continue;
      Triple m;
      m.s = intern(out.entity_ids, out.entity_names, graph.entity_names[t.s]);
      m.r = intern(out.relation_ids, out.relation_names, graph.relation_names[t.r]);
      m.o = intern(out.entity_ids, out.entity_names, graph.entity_names[t.o]);
      dst.push_back(m);
    }
  };
  map_triples(graph.train, out.train);
  map_triples(graph.valid, out.valid);
  map_triples(graph.test, out.test);
  return out;
}

}  // namespace

std::vector<HierSubset> build_hier_subsets(const KnowledgeGraph& graph,
                                           const HierarchyReport& report,
                                           std::span<const double> proportions,
                                           uint64_t seed) {
  std::vector<int32_t> hier, non_hier;
  for (const auto& row : report.relations) {
    (row.hierarchical ? hier : non_hier).push_back(row.relation);
  }
  const int64_t h = static_cast<int64_t>(hier.size());
  if (h == 0) throw std::runtime_error("no hierarchical relations to build subsets from");

  std::vector<HierSubset> out;
  std::mt19937_64 rng(seed);
  for (double p : proportions) {
    if (!(p > 0.0 && p <= 1.0))
      throw std::invalid_argument("subset proportion must be in (0, 1]");
    const int64_t want =
        static_cast<int64_t>(std::llround(static_cast<double>(h) * (1.0 - p) / p));
    if (want > static_cast<int64_t>(non_hier.size())) {
      const double achievable =
          static_cast<double>(h) / static_cast<double>(h + non_hier.size());
      std::ostringstream msg;
      msg << "proportion " << p << " needs " << want
          << " non-hierarchical relations but only " << non_hier.size()
          << " exist (lowest achievable proportion: " << achievable << ")";
      throw std::runtime_error(msg.str());
    }
    std::vector<int32_t> pool = non_hier;
    // partial Fisher-Yates: draw `want` relations without replacement
    for (int64_t i = 0; i < want; ++i) {
      std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    HierSubset subset;
    subset.proportion = p;
    subset.kept_relations = hier;
    subset.kept_relations.insert(subset.kept_relations.end(), pool.begin(),
                                 pool.begin() + want);
    std::sort(subset.kept_relations.begin(), subset.kept_relations.end());
    subset.graph = project_relations(graph, subset.kept_relations);
    out.push_back(std::move(subset));
  }
  return out;
}

KnowledgeGraph resplit(const KnowledgeGraph& graph, int64_t valid_size,
                       int64_t test_size, uint64_t seed) {
  if (valid_size < 0 || test_size < 0)
    throw std::invalid_argument("split sizes must be nonnegative");
  std::vector<Triple> pool = graph.all_triples();
  const int64_t n = static_cast<int64_t>(pool.size());
  if (valid_size + test_size >= n)
    throw std::runtime_error("requested valid+test sizes leave no training triples");

  std::mt19937_64 rng(seed);
  for (int64_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int64_t> pick(0, i);
    std::swap(pool[i], pool[pick(rng)]);
  }
  std::vector<Triple> valid(pool.begin(), pool.begin() + valid_size);
  std::vector<Triple> test(pool.begin() + valid_size,
                           pool.begin() + valid_size + test_size);
  std::vector<Triple> train(pool.begin() + valid_size + test_size, pool.end());

  std::vector<int64_t> train_rel(graph.num_relations(), 0);
  for (const Triple& t : train) ++train_rel[t.r];

  auto fix_split = [&](std::vector<Triple>& split) {
    for (Triple& t : split) {
      if (train_rel[t.r] > 0) continue;
      // swap this triple into train and pull out a replacement whose
      // relation stays covered after removal
      std::vector<size_t> candidates;
      for (size_t i = 0; i < train.size(); ++i)
        if (train_rel[train[i].r] >= 2) candidates.push_back(i);
      if (candidates.empty())
        throw std::runtime_error(
            "cannot satisfy relation coverage for the requested split sizes");
      std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
      const size_t j = candidates[pick(rng)];
      ++train_rel[t.r];
      --train_rel[train[j].r];
      std::swap(t, train[j]);
    }
  };
  fix_split(valid);
  fix_split(test);

  return graph_from_triples(graph.entity_names, graph.relation_names,
                            std::move(train), std::move(valid), std::move(test));
}

}  // namespace hyperkg
