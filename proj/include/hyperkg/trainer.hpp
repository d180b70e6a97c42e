#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hyperkg/evaluator.hpp"

namespace hyperkg {

struct TrainConfig {
  GeometryKind geometry = GeometryKind::Euclidean();
  int32_t dim = 40;
  double learning_rate = 50.0;
  int32_t batch_size = 128;
  int32_t negatives = 50;  // negative samples per positive
  int32_t epochs = 100;
  int32_t eval_every = 10;
  uint64_t seed = 1;
  double init_scale = 1e-3;
  int32_t threads = 1;
  bool tied_biases = false;            // single bias per entity instead of two
  bool check_ball_each_epoch = false;  // assert ball feasibility after epochs
  // limit on train triples scored when tracing training MRR; 0 = all
  int64_t train_mrr_sample = 0;
  TieBreak tie_break = TieBreak::midrank;
};

/// Adds (o, r + n_r_base, s) for every (s, r, o); doubles the relation
/// vocabulary.
std::vector<Triple> augment_reciprocal(std::span<const Triple> triples,
                                       int32_t n_r_base);

/// Appends k corruptions of the positive's object slot, each a uniform draw
/// from the entities other than the true object.
void sample_negatives(const Triple& positive, int32_t k, int32_t n_entities,
                      std::mt19937_64& rng, std::vector<Triple>& out);

struct Batch {
  std::vector<Triple> positives;
  std::vector<Triple> negatives;  // grouped: k per positive
  int32_t negatives_per_positive = 0;
  int64_t size() const {
    return static_cast<int64_t>(positives.size() + negatives.size());
  }
};

/// Bernoulli negative log-likelihood of one labeled sample, in the stable
/// softplus form.
double sample_loss(double phi, double label);

/// Mean NLL over the batch (positives labeled 1, negatives 0).
double batch_loss(const Batch& batch, const ModelParams& params);

/// Dense per-row gradient accumulator; rows not in the touched lists are zero.
struct GradientBundle {
  std::vector<double> entity, rel_diag, rel_trans;
  std::vector<double> bias_subject, bias_object;
  std::vector<int32_t> touched_entities, touched_relations;

  void init(int32_t n_entities, int32_t n_relations, int32_t dim);
  void reset();
  void accumulate(const Triple& triple, const ScoreGradients& grads);
  void scale(double factor);

 private:
  int32_t dim_ = 0;
  std::vector<uint8_t> entity_flag_, relation_flag_;
};

/// One optimizer step: plain SGD for Euclidean parameters, exponential-map
/// retraction with the inverse-metric rescaling for ball parameters.
void apply_update(ModelParams& params, const GradientBundle& grads,
                  double learning_rate);

struct EpochMetrics {
  int32_t epoch = 0;
  std::string split;
  double mrr = 0.0, hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
  double mean_loss = std::numeric_limits<double>::quiet_NaN();
};

using MetricsCallback = std::function<void(const EpochMetrics&)>;

struct TrainResult {
  ModelParams params;  // best-validation snapshot, or final when no validation
  int32_t best_epoch = 0;
  double best_valid_mrr = std::numeric_limits<double>::quiet_NaN();
  std::vector<EpochMetrics> trace;
};

/// Mini-batch training with reciprocal augmentation and uniform negative
/// sampling. Deterministic for a fixed seed regardless of thread count.
TrainResult train(const KnowledgeGraph& graph, const TrainConfig& config,
                  const MetricsCallback& on_metrics = {});

}  // namespace hyperkg
