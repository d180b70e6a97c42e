// Synthetic dataset builders shared by the trainer tests and the acceptance
// suite.
#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hyperkg/dataset.hpp"

namespace synth {

// Transitive closure of a complete tree: each node links to every descendant.
inline std::vector<hyperkg::Triple> tree_closure_edges(int32_t arity,
                                                       int32_t depth,
                                                       int32_t relation,
                                                       int32_t* n_nodes_out) {
  std::vector<std::vector<int32_t>> levels;
  int32_t next_id = 0;
  levels.push_back({next_id++});
  for (int32_t d = 1; d <= depth; ++d) {
    std::vector<int32_t> level;
    for (size_t i = 0; i < levels.back().size() * arity; ++i)
      level.push_back(next_id++);
    levels.push_back(std::move(level));
  }
  std::vector<std::vector<int32_t>> children(next_id);
  for (int32_t d = 0; d < depth; ++d) {
    for (size_t i = 0; i < levels[d].size(); ++i) {
      for (int32_t a = 0; a < arity; ++a)
        children[levels[d][i]].push_back(levels[d + 1][i * arity + a]);
    }
  }
  std::vector<hyperkg::Triple> edges;
  // DFS collecting every (ancestor, descendant) pair
  for (int32_t root = 0; root < next_id; ++root) {
    std::vector<int32_t> stack = children[root];
    while (!stack.empty()) {
      const int32_t node = stack.back();
      stack.pop_back();
      edges.push_back({root, relation, node});
      for (int32_t ch : children[node]) stack.push_back(ch);
    }
  }
  if (n_nodes_out) *n_nodes_out = next_id;
  return edges;
}

inline hyperkg::KnowledgeGraph tree_closure_graph(int32_t arity, int32_t depth) {
  int32_t n_nodes = 0;
  auto edges = tree_closure_edges(arity, depth, 0, &n_nodes);
  std::vector<std::string> entities, relations{"descendant_of"};
  for (int32_t i = 0; i < n_nodes; ++i) entities.push_back("n" + std::to_string(i));
  return hyperkg::graph_from_triples(std::move(entities), std::move(relations),
                                     std::move(edges), {}, {});
}

// Tree-closure relation plus a noise relation of random symmetric pairs,
// everything initially in the train split.
inline hyperkg::KnowledgeGraph two_relation_graph(int32_t arity, int32_t depth,
                                                  int32_t n_symmetric_pairs,
                                                  uint64_t seed) {
  int32_t n_nodes = 0;
  auto triples = tree_closure_edges(arity, depth, 0, &n_nodes);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int32_t> pick(0, n_nodes - 1);
  std::set<std::pair<int32_t, int32_t>> used;
  int32_t made = 0;
  while (made < n_symmetric_pairs) {
    const int32_t a = pick(rng);
    const int32_t b = pick(rng);
    if (a == b) continue;
    const auto key = std::minmax(a, b);
    if (!used.insert(key).second) continue;
    triples.push_back({a, 1, b});
    triples.push_back({b, 1, a});
    ++made;
  }
  std::vector<std::string> entities, relations{"descendant_of", "paired_with"};
  for (int32_t i = 0; i < n_nodes; ++i) entities.push_back("n" + std::to_string(i));
  return hyperkg::graph_from_triples(std::move(entities), std::move(relations),
                                     std::move(triples), {}, {});
}

}  // namespace synth
