#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hyperkg {

struct Triple {
  int32_t s = 0;
  int32_t r = 0;
  int32_t o = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
  size_t operator()(const Triple& t) const;
};

/// Integer-coded triples plus the string vocabularies behind them.
/// Ids are assigned by first appearance in train, then valid, then test.
struct KnowledgeGraph {
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
  std::unordered_map<std::string, int32_t> entity_ids;
  std::unordered_map<std::string, int32_t> relation_ids;
  std::vector<Triple> train, valid, test;
  // load-time notes: deduplicated lines, symbols absent from train
  std::vector<std::string> warnings;

  int32_t num_entities() const { return static_cast<int32_t>(entity_names.size()); }
  int32_t num_relations() const { return static_cast<int32_t>(relation_names.size()); }
  std::vector<Triple> all_triples() const;
};

/// Reads tab-separated `subject<TAB>relation<TAB>object` files. Empty paths
/// yield empty splits. Duplicate triples within a split are dropped with a
/// warning; malformed lines raise with the file name and line number.
KnowledgeGraph load_graph(const std::string& train_path,
                          const std::string& valid_path = "",
                          const std::string& test_path = "");

/// Assembles a graph directly from coded triples (synthetic data, subsets).
KnowledgeGraph graph_from_triples(std::vector<std::string> entity_names,
                                  std::vector<std::string> relation_names,
                                  std::vector<Triple> train,
                                  std::vector<Triple> valid,
                                  std::vector<Triple> test);

void write_triples(const std::string& path, const KnowledgeGraph& graph,
                   std::span<const Triple> triples,
                   const std::vector<std::string>& header_comments = {});

// ---------------------------------------------------------------------------
// Per-relation hierarchy analytics.

struct Digraph {
  int32_t n = 0;
  std::vector<std::vector<int32_t>> adj;
};

Digraph make_digraph(int32_t n, std::span<const std::pair<int32_t, int32_t>> edges);

/// Subgraph induced by one relation over the train split (pre-reciprocal),
/// with entities renumbered to the nodes actually touched.
Digraph relation_digraph(const KnowledgeGraph& graph, int32_t relation);

struct PathStats {
  std::optional<int64_t> max_path;
  std::optional<double> avg_path;
};

/// Krackhardt hierarchy score: the fraction of reachable ordered node pairs
/// (i != j, directed paths of length >= 1) that are one-directional.
/// Undefined (nullopt) when no such pair exists.
std::optional<double> khs(const Digraph& graph);

/// Max and mean shortest directed path over reachable ordered pairs (x != y).
PathStats path_stats(const Digraph& graph);

struct RelationHierarchy {
  int32_t relation = -1;
  int64_t node_count = 0;
  int64_t edge_count = 0;
  std::optional<double> khs;
  std::optional<int64_t> max_path;
  std::optional<double> avg_path;
  bool hierarchical = false;
  std::string note;  // reason when khs is undefined
};

struct HierarchyReport {
  double khs_threshold = 0.9;
  int64_t min_max_path = 2;
  std::vector<RelationHierarchy> relations;
};

/// Flags a relation hierarchical iff khs >= khs_threshold and
/// max_path >= min_max_path.
HierarchyReport classify_relations(const KnowledgeGraph& graph,
                                   double khs_threshold = 0.9,
                                   int64_t min_max_path = 2);

struct HierSubset {
  double proportion = 1.0;           // target share of hierarchical relations
  std::vector<int32_t> kept_relations;  // ids in the source graph
  KnowledgeGraph graph;
};

/// Keeps every hierarchical relation and adds round(H*(1-p)/p) non-hierarchical
/// ones drawn without replacement, mirroring the NELL-995-h{100,75,50,25}
/// construction. Throws when a proportion asks for more non-hierarchical
/// relations than exist.
std::vector<HierSubset> build_hier_subsets(const KnowledgeGraph& graph,
                                           const HierarchyReport& report,
                                           std::span<const double> proportions,
                                           uint64_t seed);

/// Pools all splits and redraws disjoint valid/test sets of the given sizes.
/// Every relation occurring in valid or test is guaranteed to appear in train;
/// violating triples are swapped back and replacements drawn.
KnowledgeGraph resplit(const KnowledgeGraph& graph, int64_t valid_size,
                       int64_t test_size, uint64_t seed);

}  // namespace hyperkg
