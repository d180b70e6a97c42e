#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "hyperkg/dataset.hpp"
#include "hyperkg/model.hpp"

namespace hyperkg {

enum class TieBreak {
  midrank,      // half of the equal-scored competitors, rounded up
  optimistic,   // ties rank below the target
  pessimistic,  // ties rank above the target
};

/// Known-true (subject, relation) -> objects over train + valid + test,
/// reciprocals included. Backs the filtered evaluation setting.
class TruthIndex {
 public:
  void add(int32_t s, int32_t r, int32_t o);
  void finalize();
  bool contains(int32_t s, int32_t r, int32_t o) const;
  std::span<const int32_t> objects(int32_t s, int32_t r) const;

  static TruthIndex from_graph(const KnowledgeGraph& graph, int32_t n_r_base);

 private:
  static uint64_t key(int32_t s, int32_t r) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(s)) << 32) |
           static_cast<uint32_t>(r);
  }
  std::unordered_map<uint64_t, std::vector<int32_t>> map_;
  bool finalized_ = false;
};

struct EvalOptions {
  TieBreak tie_break = TieBreak::midrank;
  int32_t block_size = 4096;  // candidate scoring block; no effect on results
  int32_t threads = 1;        // queries rank independently; no effect on results
};

/// Filtered rank of the true object among all entities:
/// 1 + #{better unfiltered candidates} + tie contribution.
/// The test triple itself must be present in the truth index.
int64_t rank_triple(const ModelParams& params, const Triple& test,
                    const TruthIndex& truth, const EvalOptions& opts = {});

struct RelationMetrics {
  int32_t relation = -1;  // base (pre-reciprocal) relation id
  int64_t count = 0;
  double mrr = 0.0, hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
};

struct RankingReport {
  // two ranks per test triple: (s, r, ?) then (o, r + n_r_base, ?)
  std::vector<int64_t> ranks;
  double mrr = 0.0, hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
  std::vector<RelationMetrics> per_relation;
};

/// Ranks every test triple in both directions via the reciprocal relation and
/// aggregates MRR/hits@k overall and per base relation.
RankingReport evaluate(const ModelParams& params, std::span<const Triple> test,
                       const TruthIndex& truth, int32_t n_r_base,
                       const EvalOptions& opts = {});

}  // namespace hyperkg
