#include "hyperkg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hyperkg {

std::vector<Triple> augment_reciprocal(std::span<const Triple> triples,
                                       int32_t n_r_base) {
  std::vector<Triple> out;
  out.reserve(triples.size() * 2);
  for (const Triple& t : triples) {
    if (t.r >= n_r_base)
      throw std::invalid_argument("relation id already in the reciprocal range");
    out.push_back(t);
  }
  for (const Triple& t : triples) out.push_back({t.o, t.r + n_r_base, t.s});
  return out;
}

void sample_negatives(const Triple& positive, int32_t k, int32_t n_entities,
                      std::mt19937_64& rng, std::vector<Triple>& out) {
  if (k < 1) throw std::invalid_argument("need at least one negative per positive");
  if (n_entities < 2)
    throw std::invalid_argument("negative sampling needs at least two entities");
  std::uniform_int_distribution<int32_t> pick(0, n_entities - 2);
  for (int32_t i = 0; i < k; ++i) {
    int32_t e = pick(rng);
    if (e >= positive.o) ++e;  // uniform over entities except the true object
    out.push_back({positive.s, positive.r, e});
  }
}

double sample_loss(double phi, double label) {
  return label * softplus(-phi) + (1.0 - label) * softplus(phi);
}

double batch_loss(const Batch& batch, const ModelParams& params) {
  double total = 0.0;
  for (const Triple& t : batch.positives)
    total += sample_loss(score(params, t.s, t.r, t.o), 1.0);
  for (const Triple& t : batch.negatives)
    total += sample_loss(score(params, t.s, t.r, t.o), 0.0);
  const int64_t n = batch.size();
  return n > 0 ? total / static_cast<double>(n) : 0.0;
}

void GradientBundle::init(int32_t n_entities, int32_t n_relations, int32_t dim) {
  dim_ = dim;
  entity.assign(size_t(n_entities) * dim, 0.0);
  rel_diag.assign(size_t(n_relations) * dim, 0.0);
  rel_trans.assign(size_t(n_relations) * dim, 0.0);
  bias_subject.assign(n_entities, 0.0);
  bias_object.assign(n_entities, 0.0);
  entity_flag_.assign(n_entities, 0);
  relation_flag_.assign(n_relations, 0);
  touched_entities.clear();
  touched_relations.clear();
}

void GradientBundle::reset() {
  for (int32_t e : touched_entities) {
    std::fill_n(entity.begin() + size_t(e) * dim_, dim_, 0.0);
    bias_subject[e] = 0.0;
    bias_object[e] = 0.0;
    entity_flag_[e] = 0;
  }
  for (int32_t r : touched_relations) {
    std::fill_n(rel_diag.begin() + size_t(r) * dim_, dim_, 0.0);
    std::fill_n(rel_trans.begin() + size_t(r) * dim_, dim_, 0.0);
    relation_flag_[r] = 0;
  }
  touched_entities.clear();
  touched_relations.clear();
}

void GradientBundle::accumulate(const Triple& triple, const ScoreGradients& grads) {
  for (int32_t e : {triple.s, triple.o}) {
    if (!entity_flag_[e]) {
      entity_flag_[e] = 1;
      touched_entities.push_back(e);
    }
  }
  if (!relation_flag_[triple.r]) {
    relation_flag_[triple.r] = 1;
    touched_relations.push_back(triple.r);
  }
  double* es = entity.data() + size_t(triple.s) * dim_;
  double* eo = entity.data() + size_t(triple.o) * dim_;
  double* rd = rel_diag.data() + size_t(triple.r) * dim_;
  double* rt = rel_trans.data() + size_t(triple.r) * dim_;
  for (int32_t i = 0; i < dim_; ++i) {
    es[i] += grads.d_entity_subject[i];
    eo[i] += grads.d_entity_object[i];
    rd[i] += grads.d_rel_diag[i];
    rt[i] += grads.d_rel_trans[i];
  }
  bias_subject[triple.s] += grads.d_bias_subject;
  bias_object[triple.o] += grads.d_bias_object;
}

void GradientBundle::scale(double factor) {
  for (int32_t e : touched_entities) {
    double* row = entity.data() + size_t(e) * dim_;
    for (int32_t i = 0; i < dim_; ++i) row[i] *= factor;
    bias_subject[e] *= factor;
    bias_object[e] *= factor;
  }
  for (int32_t r : touched_relations) {
    double* d = rel_diag.data() + size_t(r) * dim_;
    double* t = rel_trans.data() + size_t(r) * dim_;
    for (int32_t i = 0; i < dim_; ++i) {
      d[i] *= factor;
      t[i] *= factor;
    }
  }
}

void apply_update(ModelParams& params, const GradientBundle& grads,
                  double learning_rate) {
  const int32_t dim = params.dim;
  const bool ball = params.geometry.is_poincare();
  std::vector<double> step(dim);
  const Curvature c = ball ? params.geometry.ball() : Curvature(1.0);

  auto ball_step = [&](std::span<double> point, const double* grad) {
    // theta <- exp_theta(-lr * grad / lambda^2), then the margin projection
    const double lam = conformal_factor(point, c);
    const double f = -learning_rate / (lam * lam);
    for (int32_t i = 0; i < dim; ++i) step[i] = f * grad[i];
    exp_map(point, step, c, point);
    project_to_ball(point, c);
  };

  for (int32_t e : grads.touched_entities) {
    auto row = params.entity(e);
    const double* g = grads.entity.data() + size_t(e) * dim;
    if (ball) {
      ball_step(row, g);
    } else {
      for (int32_t i = 0; i < dim; ++i) row[i] -= learning_rate * g[i];
    }
    params.bias_subject[e] -= learning_rate * grads.bias_subject[e];
    params.bias_object[e] -= learning_rate * grads.bias_object[e];
  }
  for (int32_t r : grads.touched_relations) {
    auto diag = params.diag(r);
    const double* gd = grads.rel_diag.data() + size_t(r) * dim;
    for (int32_t i = 0; i < dim; ++i) diag[i] -= learning_rate * gd[i];
    auto trans = params.trans(r);
    const double* gt = grads.rel_trans.data() + size_t(r) * dim;
    if (ball) {
      ball_step(trans, gt);
    } else {
      for (int32_t i = 0; i < dim; ++i) trans[i] -= learning_rate * gt[i];
    }
  }
}

namespace {

void validate_config(const TrainConfig& cfg, int64_t augmented_size) {
  if (cfg.dim <= 0) throw std::invalid_argument("dim must be positive");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (cfg.batch_size > augmented_size)
    throw std::invalid_argument("batch size exceeds the augmented training set");
  if (cfg.negatives <= 0) throw std::invalid_argument("negatives must be positive");
  if (cfg.epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (cfg.eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (!(cfg.init_scale > 0.0))
    throw std::invalid_argument("init_scale must be positive");
  if (cfg.threads <= 0) throw std::invalid_argument("threads must be positive");
}

// Per-sample gradients computed in index-striped shards; the fold into the
// batch accumulator stays in sample order, so results are identical for any
// thread count.
void compute_sample_grads(const ModelParams& params,
                          std::span<const Triple> samples,
                          std::span<const double> labels, int32_t threads,
                          std::vector<ScoreGradWorkspace>& workspaces,
                          std::vector<ScoreGradients>& out) {
  const size_t n = samples.size();
  const int32_t t_count =
      std::max<int32_t>(1, std::min<int64_t>(threads, static_cast<int64_t>(n)));
  auto run = [&](int32_t shard) {
    ScoreGradWorkspace& work = workspaces[shard];
    for (size_t i = shard; i < n; i += t_count) {
      score_gradients(params, samples[i].s, samples[i].r, samples[i].o,
                      labels[i], work, out[i]);
    }
  };
  if (t_count == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t_count - 1);
  for (int32_t s = 1; s < t_count; ++s) pool.emplace_back(run, s);
  run(0);
  for (auto& th : pool) th.join();
}

void check_ball_feasible(const ModelParams& params) {
  if (!params.geometry.is_poincare()) return;
  const double c = params.geometry.curvature;
  const double limit = (1.0 - kEpsBall) * (1.0 - kEpsBall);
  for (int32_t e = 0; e < params.n_entities; ++e) {
    if (c * norm_sq(params.entity(e)) > limit + 1e-12)
      throw std::runtime_error("entity row " + std::to_string(e) +
                               " escaped the ball margin");
  }
  for (int32_t r = 0; r < params.n_relations; ++r) {
    if (c * norm_sq(params.trans(r)) > limit + 1e-12)
      throw std::runtime_error("relation translation " + std::to_string(r) +
                               " escaped the ball margin");
  }
}

}  // namespace

TrainResult train(const KnowledgeGraph& graph, const TrainConfig& cfg,
                  const MetricsCallback& on_metrics) {
  const int32_t n_r_base = graph.num_relations();
  const int32_t n_e = graph.num_entities();
  std::vector<Triple> positives = augment_reciprocal(graph.train, n_r_base);
  validate_config(cfg, static_cast<int64_t>(positives.size()));

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  ModelParams params = ModelParams::init(cfg.geometry, n_e, 2 * n_r_base,
                                         cfg.dim, cfg.init_scale, rng);

  const TruthIndex truth = TruthIndex::from_graph(graph, n_r_base);
  EvalOptions eval_opts;
  eval_opts.tie_break = cfg.tie_break;
  eval_opts.threads = cfg.threads;

  // fixed subsample of train triples for the training-MRR trace
  std::vector<Triple> train_eval = graph.train;
  if (cfg.train_mrr_sample > 0 &&
      cfg.train_mrr_sample < static_cast<int64_t>(train_eval.size())) {
    std::mt19937_64 sample_rng(cfg.seed ^ 0x5eedd1ceULL);
    for (size_t i = 0; i < static_cast<size_t>(cfg.train_mrr_sample); ++i) {
      std::uniform_int_distribution<size_t> pick(i, train_eval.size() - 1);
      std::swap(train_eval[i], train_eval[pick(sample_rng)]);
    }
    train_eval.resize(cfg.train_mrr_sample);
  }

  GradientBundle accum;
  accum.init(n_e, 2 * n_r_base, cfg.dim);
  const size_t max_batch_samples =
      static_cast<size_t>(cfg.batch_size) * (1 + cfg.negatives);
  std::vector<ScoreGradients> sample_grads(max_batch_samples);
  std::vector<ScoreGradWorkspace> workspaces(std::max(1, cfg.threads));
  std::vector<Triple> samples;
  std::vector<double> labels;
  samples.reserve(max_batch_samples);
  labels.reserve(max_batch_samples);

  double best_mrr = -1.0;
  int32_t best_epoch = 0;
  ModelParams best_params = params;
  bool have_best = false;

  for (int32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (size_t i = positives.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<size_t> pick(0, i);
      std::swap(positives[i], positives[pick(rng)]);
    }

    double epoch_loss_sum = 0.0;
    int64_t epoch_samples = 0;
    const size_t n_batches =
        (positives.size() + cfg.batch_size - 1) / cfg.batch_size;
    for (size_t b = 0; b < n_batches; ++b) {
      const size_t begin = b * cfg.batch_size;
      const size_t end = std::min(positives.size(), begin + cfg.batch_size);
      samples.clear();
      labels.clear();
      for (size_t i = begin; i < end; ++i) {
        samples.push_back(positives[i]);
        labels.push_back(1.0);
        sample_negatives(positives[i], cfg.negatives, n_e, rng, samples);
        labels.resize(labels.size() + cfg.negatives, 0.0);
      }

      compute_sample_grads(params, samples, labels, cfg.threads, workspaces,
                           sample_grads);

      accum.reset();
      double batch_loss_sum = 0.0;
      for (size_t i = 0; i < samples.size(); ++i) {
        accum.accumulate(samples[i], sample_grads[i]);
        batch_loss_sum += sample_grads[i].loss;
      }
      if (!std::isfinite(batch_loss_sum)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " batch " << b
            << " (first triple " << samples.front().s << " " << samples.front().r
            << " " << samples.front().o << ")";
        throw std::runtime_error(msg.str());
      }
      accum.scale(1.0 / static_cast<double>(samples.size()));
      if (cfg.tied_biases) {
        for (int32_t e : accum.touched_entities) {
          const double g = accum.bias_subject[e] + accum.bias_object[e];
          accum.bias_subject[e] = g;
          accum.bias_object[e] = g;
        }
      }
      apply_update(params, accum, cfg.learning_rate);
      epoch_loss_sum += batch_loss_sum;
      epoch_samples += static_cast<int64_t>(samples.size());
    }

    if (cfg.check_ball_each_epoch) check_ball_feasible(params);

    const double epoch_loss =
        epoch_loss_sum / static_cast<double>(std::max<int64_t>(1, epoch_samples));
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      if (!train_eval.empty()) {
        const RankingReport r =
            evaluate(params, train_eval, truth, n_r_base, eval_opts);
        EpochMetrics m{epoch, "train", r.mrr, r.hits1, r.hits3, r.hits10,
                       epoch_loss};
        result.trace.push_back(m);
        if (on_metrics) on_metrics(m);
      }
      if (!graph.valid.empty()) {
        const RankingReport r =
            evaluate(params, graph.valid, truth, n_r_base, eval_opts);
        double valid_loss = 0.0;
        for (const Triple& t : graph.valid)
          valid_loss += sample_loss(score(params, t.s, t.r, t.o), 1.0);
        valid_loss /= static_cast<double>(graph.valid.size());
        EpochMetrics m{epoch, "valid", r.mrr, r.hits1, r.hits3, r.hits10,
                       valid_loss};
        result.trace.push_back(m);
        if (on_metrics) on_metrics(m);
        if (r.mrr > best_mrr) {
          best_mrr = r.mrr;
          best_epoch = epoch;
          best_params = params;
          have_best = true;
        }
      }
    }
  }

  if (have_best) {
    result.params = std::move(best_params);
    result.best_epoch = best_epoch;
    result.best_valid_mrr = best_mrr;
  } else {
    result.params = std::move(params);
    result.best_epoch = cfg.epochs;
  }
  return result;
}

}  // namespace hyperkg
