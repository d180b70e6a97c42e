#include "hyperkg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace hyperkg {

void TruthIndex::add(int32_t s, int32_t r, int32_t o) {
  map_[key(s, r)].push_back(o);
  finalized_ = false;
}

void TruthIndex::finalize() {
  for (auto& [k, objs] : map_) {
    std::sort(objs.begin(), objs.end());
    objs.erase(std::unique(objs.begin(), objs.end()), objs.end());
  }
  finalized_ = true;
}

bool TruthIndex::contains(int32_t s, int32_t r, int32_t o) const {
  const auto objs = objects(s, r);
  return std::binary_search(objs.begin(), objs.end(), o);
}

std::span<const int32_t> TruthIndex::objects(int32_t s, int32_t r) const {
  if (!finalized_) throw std::logic_error("TruthIndex::finalize not called");
  const auto it = map_.find(key(s, r));
  if (it == map_.end()) return {};
  return it->second;
}

TruthIndex TruthIndex::from_graph(const KnowledgeGraph& graph, int32_t n_r_base) {
  TruthIndex index;
  for (const auto* split : {&graph.train, &graph.valid, &graph.test}) {
    for (const Triple& t : *split) {
      index.add(t.s, t.r, t.o);
      index.add(t.o, t.r + n_r_base, t.s);
    }
  }
  index.finalize();
  return index;
}

namespace {

// Per-query scorer with the relation-transformed subject precomputed; scoring
// a candidate object is then O(dim).
class CandidateScorer {
 public:
  explicit CandidateScorer(const ModelParams& params) : params_(params) {
    subject_part_.resize(params.dim);
    scratch_.resize(params.dim);
  }

  void prepare(int32_t s, int32_t r) {
    params_.check_entity(s);
    params_.check_relation(r);
    r_ = r;
    bias_s_ = params_.bias_subject[s];
    if (params_.geometry.is_poincare()) {
      mobius_matvec(params_.diag(r), params_.entity(s), params_.geometry.ball(),
                    subject_part_);
    } else {
      const auto es = params_.entity(s);
      const auto d = params_.diag(r);
      const auto t = params_.trans(r);
      // R e_s - r, so each candidate costs one squared distance
      for (int32_t i = 0; i < params_.dim; ++i)
        subject_part_[i] = d[i] * es[i] - t[i];
    }
  }

  double score_object(int32_t e) {
    if (params_.geometry.is_poincare()) {
      const Curvature c = params_.geometry.ball();
      mobius_add(params_.entity(e), params_.trans(r_), c, scratch_);
      const double dist = poincare_distance(subject_part_, scratch_, c);
      return -dist * dist + bias_s_ + params_.bias_object[e];
    }
    const auto eo = params_.entity(e);
    double dist_sq = 0.0;
    for (int32_t i = 0; i < params_.dim; ++i) {
      const double u = subject_part_[i] - eo[i];
      dist_sq += u * u;
    }
    return -dist_sq + bias_s_ + params_.bias_object[e];
  }

 private:
  const ModelParams& params_;
  int32_t r_ = -1;
  double bias_s_ = 0.0;
  std::vector<double> subject_part_;
  std::vector<double> scratch_;
};

int64_t tie_rank(int64_t greater, int64_t equal, TieBreak tie) {
  switch (tie) {
    case TieBreak::optimistic:
      return 1 + greater;
    case TieBreak::pessimistic:
      return 1 + greater + equal;
    case TieBreak::midrank:
    default:
      return 1 + greater + (equal + 1) / 2;
  }
}

int64_t rank_with_scorer(CandidateScorer& scorer, const ModelParams& params,
                         const Triple& test, const TruthIndex& truth,
                         const EvalOptions& opts) {
  scorer.prepare(test.s, test.r);
  const double target = scorer.score_object(test.o);
  const auto known = truth.objects(test.s, test.r);
  int64_t greater = 0, equal = 0;
  const int32_t n = params.n_entities;
  const int32_t block = std::max<int32_t>(1, opts.block_size);
  for (int32_t begin = 0; begin < n; begin += block) {
    const int32_t end = std::min(n, begin + block);
    for (int32_t e = begin; e < end; ++e) {
      if (e == test.o) continue;
      if (std::binary_search(known.begin(), known.end(), e)) continue;
      const double sc = scorer.score_object(e);
      if (sc > target)
        ++greater;
      else if (sc == target)
        ++equal;
    }
  }
  return tie_rank(greater, equal, opts.tie_break);
}

}  // namespace

int64_t rank_triple(const ModelParams& params, const Triple& test,
                    const TruthIndex& truth, const EvalOptions& opts) {
  if (!truth.contains(test.s, test.r, test.o))
    throw std::invalid_argument("test triple absent from the truth index");
  CandidateScorer scorer(params);
  return rank_with_scorer(scorer, params, test, truth, opts);
}

RankingReport evaluate(const ModelParams& params, std::span<const Triple> test,
                       const TruthIndex& truth, int32_t n_r_base,
                       const EvalOptions& opts) {
  RankingReport report;

  // both directions of every test triple, ranked independently
  std::vector<Triple> queries;
  queries.reserve(test.size() * 2);
  for (const Triple& t : test) {
    if (!truth.contains(t.s, t.r, t.o))
      throw std::invalid_argument("test triple absent from the truth index");
    queries.push_back(t);
    const Triple reciprocal{t.o, t.r + n_r_base, t.s};
    if (!truth.contains(reciprocal.s, reciprocal.r, reciprocal.o))
      throw std::invalid_argument("reciprocal test triple absent from the truth index");
    queries.push_back(reciprocal);
  }

  report.ranks.assign(queries.size(), 0);
  const int32_t t_count = std::max<int32_t>(
      1, std::min<int64_t>(opts.threads, static_cast<int64_t>(queries.size())));
  auto worker = [&](int32_t shard) {
    CandidateScorer scorer(params);
    for (size_t i = shard; i < queries.size(); i += t_count)
      report.ranks[i] = rank_with_scorer(scorer, params, queries[i], truth, opts);
  };
  if (t_count == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t_count - 1);
    for (int32_t s = 1; s < t_count; ++s) pool.emplace_back(worker, s);
    worker(0);
    for (auto& th : pool) th.join();
  }

  struct Accum {
    int64_t count = 0;
    double rr = 0.0;
    int64_t h1 = 0, h3 = 0, h10 = 0;
  };
  std::unordered_map<int32_t, Accum> by_relation;
  Accum overall;

  for (size_t i = 0; i < queries.size(); ++i) {
    const int32_t base_relation = test[i / 2].r;
    const int64_t rank = report.ranks[i];
    for (Accum* a : {&overall, &by_relation[base_relation]}) {
      ++a->count;
      a->rr += 1.0 / static_cast<double>(rank);
      if (rank <= 1) ++a->h1;
      if (rank <= 3) ++a->h3;
      if (rank <= 10) ++a->h10;
    }
  }

  auto finish = [](const Accum& a, double& mrr, double& h1, double& h3, double& h10) {
    const double n = static_cast<double>(std::max<int64_t>(1, a.count));
    mrr = a.rr / n;
    h1 = static_cast<double>(a.h1) / n;
    h3 = static_cast<double>(a.h3) / n;
    h10 = static_cast<double>(a.h10) / n;
  };
  finish(overall, report.mrr, report.hits1, report.hits3, report.hits10);

  std::vector<int32_t> rels;
  rels.reserve(by_relation.size());
  for (const auto& [r, _] : by_relation) rels.push_back(r);
  std::sort(rels.begin(), rels.end());
  for (int32_t r : rels) {
    RelationMetrics m;
    m.relation = r;
    m.count = by_relation[r].count;
    finish(by_relation[r], m.mrr, m.hits1, m.hits3, m.hits10);
    report.per_relation.push_back(m);
  }
  return report;
}

}  // namespace hyperkg
