#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hyperkg/trainer.hpp"
#include "synth.hpp"

using namespace hyperkg;

namespace {

KnowledgeGraph one_triple_graph() {
  return graph_from_triples({"a", "b"}, {"r"}, {{0, 0, 1}}, {}, {});
}

}  // namespace

TEST_CASE("reciprocal augmentation") {
  CHECK(augment_reciprocal({}, 3).empty());

  const std::vector<Triple> one{{0, 0, 1}};
  const auto doubled = augment_reciprocal(one, 1);
  REQUIRE(doubled.size() == 2);
  CHECK(doubled[0] == Triple{0, 0, 1});
  CHECK(doubled[1] == Triple{1, 1, 0});

  const std::vector<Triple> three{{0, 0, 1}, {1, 1, 2}, {2, 0, 0}};
  const auto six = augment_reciprocal(three, 2);
  REQUIRE(six.size() == 6);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(six[i] == three[i]);
    CHECK(six[3 + i] == Triple{three[i].o, three[i].r + 2, three[i].s});
  }

  CHECK_THROWS_AS(augment_reciprocal(six, 2), std::invalid_argument);
}

TEST_CASE("negative sampling") {
  std::mt19937_64 rng(3);

  SUBCASE("two entities leave a single choice") {
    std::vector<Triple> out;
    sample_negatives({0, 0, 1}, 1, 2, rng, out);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == Triple{0, 0, 0});
  }

  SUBCASE("never collides with the true object") {
    std::vector<Triple> out;
    for (int rep = 0; rep < 2000; ++rep) {
      out.clear();
      const Triple pos{1, 0, rep % 7};
      sample_negatives(pos, 5, 7, rng, out);
      for (const Triple& t : out) {
        CHECK(t.s == pos.s);
        CHECK(t.r == pos.r);
        CHECK(t.o != pos.o);
        CHECK(t.o >= 0);
        CHECK(t.o < 7);
      }
    }
  }

  SUBCASE("uniform over the other entities (chi-square)") {
    const int32_t n_e = 11;
    const Triple pos{0, 0, 3};
    const int64_t draws = 100000;
    std::vector<int64_t> counts(n_e, 0);
    std::vector<Triple> out;
    for (int64_t i = 0; i < draws; ++i) {
      out.clear();
      sample_negatives(pos, 1, n_e, rng, out);
      ++counts[out[0].o];
    }
    CHECK(counts[pos.o] == 0);
    const double expected = static_cast<double>(draws) / (n_e - 1);
    double chi2 = 0.0;
    for (int32_t e = 0; e < n_e; ++e) {
      if (e == pos.o) continue;
      const double d = counts[e] - expected;
      chi2 += d * d / expected;
    }
    // df = 9: mean 9, sd sqrt(18); 3 sigma above the mean
    CHECK(chi2 < 9.0 + 3.0 * std::sqrt(18.0));
  }
}

TEST_CASE("loss values") {
  CHECK(sample_loss(0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(sample_loss(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // p = (0.9, 0.2), y = (1, 0): L = -(log .9 + log .8)/2
  const double phi1 = std::log(0.9 / 0.1);
  const double phi2 = std::log(0.2 / 0.8);
  const double mean = (sample_loss(phi1, 1.0) + sample_loss(phi2, 0.0)) / 2.0;
  CHECK(mean == doctest::Approx(0.16425203).epsilon(1e-6));

  // extreme scores stay finite
  CHECK(std::isfinite(sample_loss(800.0, 0.0)));
  CHECK(std::isfinite(sample_loss(-800.0, 1.0)));

  SUBCASE("batch_loss averages over positives and negatives") {
    std::mt19937_64 rng(1);
    ModelParams p = ModelParams::init(GeometryKind::Euclidean(), 3, 2, 2, 1e-3, rng);
    Batch batch;
    batch.positives = {{0, 0, 1}};
    batch.negatives = {{0, 0, 2}, {0, 0, 0}};
    batch.negatives_per_positive = 2;
    double expected = sample_loss(score(p, 0, 0, 1), 1.0);
    expected += sample_loss(score(p, 0, 0, 2), 0.0);
    expected += sample_loss(score(p, 0, 0, 0), 0.0);
    CHECK(batch_loss(batch, p) == doctest::Approx(expected / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("apply_update") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::mt19937_64 rng(5);
    for (auto geo : {GeometryKind::Euclidean(), GeometryKind::Poincare(1.0)}) {
      ModelParams p = ModelParams::init(geo, 3, 2, 2, 1e-3, rng);
      const ModelParams before = p;
      GradientBundle g;
      g.init(3, 2, 2);
      ScoreGradients zero;
      zero.d_entity_subject.assign(2, 0.0);
      zero.d_entity_object.assign(2, 0.0);
      zero.d_rel_diag.assign(2, 0.0);
      zero.d_rel_trans.assign(2, 0.0);
      g.accumulate({0, 0, 1}, zero);
      apply_update(p, g, 0.5);
      CHECK(p.entity_emb == before.entity_emb);
      CHECK(p.rel_diag == before.rel_diag);
      CHECK(p.rel_trans == before.rel_trans);
      CHECK(p.bias_subject == before.bias_subject);
      CHECK(p.bias_object == before.bias_object);
    }
  }

  SUBCASE("plain SGD for Euclidean parameters") {
    std::mt19937_64 rng(6);
    ModelParams p = ModelParams::init(GeometryKind::Euclidean(), 2, 2, 1, 1e-3, rng);
    p.entity(0)[0] = 1.0;
    GradientBundle g;
    g.init(2, 2, 1);
    ScoreGradients grads;
    grads.d_entity_subject = {0.5};
    grads.d_entity_object = {0.0};
    grads.d_rel_diag = {0.0};
    grads.d_rel_trans = {0.0};
    g.accumulate({0, 0, 1}, grads);
    apply_update(p, g, 0.1);
    CHECK(p.entity(0)[0] == doctest::Approx(0.95).epsilon(1e-15));
  }

  SUBCASE("ball update from the origin is exp_0(-lr g / 4)") {
    std::mt19937_64 rng(7);
    ModelParams p = ModelParams::init(GeometryKind::Poincare(1.0), 2, 2, 3, 1e-3, rng);
    std::fill(p.entity(0).begin(), p.entity(0).end(), 0.0);
    const std::vector<double> grad{0.3, -0.8, 0.1};
    GradientBundle g;
    g.init(2, 2, 3);
    ScoreGradients grads;
    grads.d_entity_subject = grad;
    grads.d_entity_object.assign(3, 0.0);
    grads.d_rel_diag.assign(3, 0.0);
    grads.d_rel_trans.assign(3, 0.0);
    g.accumulate({0, 0, 1}, grads);
    const double lr = 0.4;
    apply_update(p, g, lr);
    std::vector<double> expected(3), v(3);
    for (int i = 0; i < 3; ++i) v[i] = -lr * grad[i] / 4.0;
    exp_map_origin(v, Curvature(1.0), expected);
    for (int i = 0; i < 3; ++i)
      CHECK(p.entity(0)[i] == doctest::Approx(expected[i]).epsilon(1e-14));
  }
}

TEST_CASE("euclidean apply_update is plain SGD bit for bit") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    ModelParams p = ModelParams::init(GeometryKind::Euclidean(), 5, 4, 3, 0.5, rng);
    GradientBundle bundle;
    bundle.init(5, 4, 3);
    std::uniform_int_distribution<int32_t> ent(0, 4), rel(0, 3);
    for (int k = 0; k < 4; ++k) {
      ScoreGradients grads;
      grads.d_entity_subject = {g(rng), g(rng), g(rng)};
      grads.d_entity_object = {g(rng), g(rng), g(rng)};
      grads.d_rel_diag = {g(rng), g(rng), g(rng)};
      grads.d_rel_trans = {g(rng), g(rng), g(rng)};
      grads.d_bias_subject = g(rng);
      grads.d_bias_object = g(rng);
      bundle.accumulate({ent(rng), rel(rng), ent(rng)}, grads);
    }
    const double lr = 0.37;

    // independent SGD sweep over the dense gradient arrays
    ModelParams manual = p;
    for (size_t i = 0; i < manual.entity_emb.size(); ++i)
      manual.entity_emb[i] -= lr * bundle.entity[i];
    for (size_t i = 0; i < manual.rel_diag.size(); ++i)
      manual.rel_diag[i] -= lr * bundle.rel_diag[i];
    for (size_t i = 0; i < manual.rel_trans.size(); ++i)
      manual.rel_trans[i] -= lr * bundle.rel_trans[i];
    for (size_t i = 0; i < manual.bias_subject.size(); ++i) {
      manual.bias_subject[i] -= lr * bundle.bias_subject[i];
      manual.bias_object[i] -= lr * bundle.bias_object[i];
    }

    apply_update(p, bundle, lr);
    CHECK(p.entity_emb == manual.entity_emb);
    CHECK(p.rel_diag == manual.rel_diag);
    CHECK(p.rel_trans == manual.rel_trans);
    CHECK(p.bias_subject == manual.bias_subject);
    CHECK(p.bias_object == manual.bias_object);
  }
}

TEST_CASE("batch gradient linearity") {
  // gradient of the mean equals the mean of per-sample gradients
  std::mt19937_64 rng(8);
  ModelParams p = ModelParams::init(GeometryKind::Poincare(1.0), 4, 4, 3, 0.1, rng);
  const std::vector<Triple> samples{{0, 0, 1}, {1, 0, 2}, {0, 1, 3}, {2, 2, 0}};
  const std::vector<double> labels{1.0, 0.0, 1.0, 0.0};

  GradientBundle sum;
  sum.init(4, 4, 3);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto g = score_gradients(p, samples[i].s, samples[i].r, samples[i].o,
                                   labels[i]);
    sum.accumulate(samples[i], g);
  }
  sum.scale(1.0 / samples.size());

  // fold in the opposite order with pre-divided contributions
  GradientBundle mean;
  mean.init(4, 4, 3);
  for (size_t i = samples.size(); i-- > 0;) {
    auto g = score_gradients(p, samples[i].s, samples[i].r, samples[i].o,
                             labels[i]);
    for (auto* vec : {&g.d_entity_subject, &g.d_entity_object, &g.d_rel_diag,
                      &g.d_rel_trans})
      for (double& v : *vec) v /= samples.size();
    g.d_bias_subject /= samples.size();
    g.d_bias_object /= samples.size();
    mean.accumulate(samples[i], g);
  }

  for (int32_t e = 0; e < 4; ++e) {
    for (int32_t i = 0; i < 3; ++i)
      CHECK(sum.entity[e * 3 + i] ==
            doctest::Approx(mean.entity[e * 3 + i]).epsilon(1e-12));
    CHECK(sum.bias_subject[e] == doctest::Approx(mean.bias_subject[e]).epsilon(1e-12));
    CHECK(sum.bias_object[e] == doctest::Approx(mean.bias_object[e]).epsilon(1e-12));
  }
}

TEST_CASE("initialization stays near the origin") {
  std::mt19937_64 rng(9);
  const double scale = 1e-3;
  const int32_t dim = 24;
  ModelParams p =
      ModelParams::init(GeometryKind::Poincare(1.0), 50, 6, dim, scale, rng);
  for (int32_t e = 0; e < p.n_entities; ++e)
    CHECK(norm(p.entity(e)) <= scale * std::sqrt(double(dim)));
  for (int32_t r = 0; r < p.n_relations; ++r) {
    CHECK(norm(p.trans(r)) <= scale * std::sqrt(double(dim)));
    for (double v : p.diag(r)) CHECK(v == 1.0);
  }
  for (double v : p.bias_subject) CHECK(v == 0.0);
  for (double v : p.bias_object) CHECK(v == 0.0);
}

TEST_CASE("one epoch on a one-triple dataset decreases its loss") {
  const KnowledgeGraph g = one_triple_graph();
  for (auto geo : {GeometryKind::Euclidean(), GeometryKind::Poincare(1.0)}) {
    TrainConfig cfg;
    cfg.geometry = geo;
    cfg.dim = 4;
    cfg.learning_rate = 1.0;
    cfg.batch_size = 2;
    cfg.negatives = 1;
    cfg.epochs = 1;
    cfg.eval_every = 1;
    cfg.seed = 12;

    // replicate the trainer's initialization to get the starting loss
    std::mt19937_64 rng(cfg.seed);
    const ModelParams before =
        ModelParams::init(geo, g.num_entities(), 2, cfg.dim, cfg.init_scale, rng);
    const double loss_before = sample_loss(score(before, 0, 0, 1), 1.0);

    const TrainResult result = train(g, cfg);
    const double loss_after = sample_loss(score(result.params, 0, 0, 1), 1.0);
    CHECK(loss_after < loss_before);
  }
}

TEST_CASE("training is deterministic and thread-count invariant") {
  const KnowledgeGraph g = synth::two_relation_graph(3, 2, 6, 21);
  TrainConfig cfg;
  cfg.geometry = GeometryKind::Poincare(1.0);
  cfg.dim = 4;
  cfg.learning_rate = 5.0;
  cfg.batch_size = 8;
  cfg.negatives = 3;
  cfg.epochs = 3;
  cfg.eval_every = 3;
  cfg.seed = 77;

  const TrainResult a = train(g, cfg);
  const TrainResult b = train(g, cfg);
  CHECK(a.params.entity_emb == b.params.entity_emb);
  CHECK(a.params.rel_diag == b.params.rel_diag);
  CHECK(a.params.rel_trans == b.params.rel_trans);
  CHECK(a.params.bias_subject == b.params.bias_subject);
  CHECK(a.params.bias_object == b.params.bias_object);

  TrainConfig threaded = cfg;
  threaded.threads = 3;
  const TrainResult c = train(g, threaded);
  CHECK(c.params.entity_emb == a.params.entity_emb);
  CHECK(c.params.bias_subject == a.params.bias_subject);

  TrainConfig other_seed = cfg;
  other_seed.seed = 78;
  const TrainResult d = train(g, other_seed);
  CHECK(d.params.entity_emb != a.params.entity_emb);
}

TEST_CASE("ball feasibility is maintained under aggressive steps") {
  const KnowledgeGraph g = synth::tree_closure_graph(3, 2);
  TrainConfig cfg;
  cfg.geometry = GeometryKind::Poincare(2.0);
  cfg.dim = 3;
  cfg.learning_rate = 100.0;  // deliberately oversized steps
  cfg.batch_size = 16;
  cfg.negatives = 4;
  cfg.epochs = 5;
  cfg.eval_every = 5;
  cfg.seed = 5;
  cfg.check_ball_each_epoch = true;  // throws if any row escapes

  const TrainResult result = train(g, cfg);
  const double limit = (1.0 - kEpsBall) * (1.0 - kEpsBall);
  for (int32_t e = 0; e < result.params.n_entities; ++e)
    CHECK(2.0 * norm_sq(result.params.entity(e)) <= limit + 1e-12);
  for (int32_t r = 0; r < result.params.n_relations; ++r)
    CHECK(2.0 * norm_sq(result.params.trans(r)) <= limit + 1e-12);
}

TEST_CASE("murp update approaches the mure update as curvature vanishes") {
  // loss_P(theta) = loss_E(2 theta) in the c -> 0 limit, so doubling the
  // Poincare step must reproduce the Euclidean step on doubled parameters.
  const double c = 1e-8;
  std::mt19937_64 rng(31);
  ModelParams murp = ModelParams::init(GeometryKind::Poincare(c), 4, 4, 3, 1e-3, rng);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (double& v : murp.entity_emb) v = u(rng);
  for (double& v : murp.rel_trans) v = u(rng);
  for (double& v : murp.rel_diag) v = 1.0 + u(rng);
  for (double& v : murp.bias_subject) v = u(rng);
  for (double& v : murp.bias_object) v = u(rng);

  ModelParams mure = murp;
  mure.geometry = GeometryKind::Euclidean();
  for (double& v : mure.entity_emb) v *= 2.0;
  for (double& v : mure.rel_trans) v *= 2.0;

  const std::vector<Triple> samples{{0, 0, 1}, {2, 1, 3}, {1, 2, 0}};
  const std::vector<double> labels{1.0, 0.0, 1.0};
  const double lr = 0.5;

  auto step = [&](ModelParams& params) {
    GradientBundle g;
    g.init(4, 4, 3);
    for (size_t i = 0; i < samples.size(); ++i) {
      const auto grads = score_gradients(params, samples[i].s, samples[i].r,
                                         samples[i].o, labels[i]);
      g.accumulate(samples[i], grads);
    }
    g.scale(1.0 / samples.size());
    apply_update(params, g, lr);
  };

  const ModelParams murp_before = murp;
  const ModelParams mure_before = mure;
  step(murp);
  step(mure);

  for (size_t i = 0; i < murp.entity_emb.size(); ++i) {
    const double step_p2 = 2.0 * (murp.entity_emb[i] - murp_before.entity_emb[i]);
    const double step_e = mure.entity_emb[i] - mure_before.entity_emb[i];
    if (std::abs(step_e) > 1e-12)
      CHECK(std::abs(step_p2 - step_e) / std::abs(step_e) < 1e-3);
  }
  for (size_t i = 0; i < murp.rel_trans.size(); ++i) {
    const double step_p2 = 2.0 * (murp.rel_trans[i] - murp_before.rel_trans[i]);
    const double step_e = mure.rel_trans[i] - mure_before.rel_trans[i];
    if (std::abs(step_e) > 1e-12)
      CHECK(std::abs(step_p2 - step_e) / std::abs(step_e) < 1e-3);
  }
  // relation diagonals and biases are Euclidean in both models
  for (size_t i = 0; i < murp.rel_diag.size(); ++i) {
    const double dp = murp.rel_diag[i] - murp_before.rel_diag[i];
    const double de = mure.rel_diag[i] - mure_before.rel_diag[i];
    if (std::abs(de) > 1e-12) CHECK(std::abs(dp - de) / std::abs(de) < 1e-3);
  }
  for (size_t i = 0; i < murp.bias_subject.size(); ++i) {
    const double dp = murp.bias_subject[i] - murp_before.bias_subject[i];
    const double de = mure.bias_subject[i] - mure_before.bias_subject[i];
    if (std::abs(de) > 1e-12) CHECK(std::abs(dp - de) / std::abs(de) < 1e-3);
  }
}

TEST_CASE("divergent training aborts with a batch diagnostic") {
  const KnowledgeGraph g = synth::tree_closure_graph(2, 2);
  TrainConfig cfg;
  cfg.geometry = GeometryKind::Euclidean();
  cfg.dim = 2;
  cfg.learning_rate = 1e300;
  cfg.batch_size = 4;
  cfg.negatives = 2;
  cfg.epochs = 50;
  cfg.eval_every = 50;
  cfg.seed = 3;
  CHECK_THROWS_WITH_AS(train(g, cfg), doctest::Contains("non-finite loss"),
                       std::runtime_error);
}

TEST_CASE("trace rows and best-epoch bookkeeping") {
  KnowledgeGraph g = synth::two_relation_graph(3, 2, 4, 9);
  g = resplit(g, 6, 6, 11);
  TrainConfig cfg;
  cfg.geometry = GeometryKind::Euclidean();
  cfg.dim = 4;
  cfg.learning_rate = 10.0;
  cfg.batch_size = 16;
  cfg.negatives = 5;
  cfg.epochs = 6;
  cfg.eval_every = 2;
  cfg.seed = 4;

  const TrainResult result = train(g, cfg);
  int train_rows = 0, valid_rows = 0;
  double best_seen = -1.0;
  for (const auto& row : result.trace) {
    CHECK((row.split == "train" || row.split == "valid"));
    if (row.split == "train") ++train_rows;
    if (row.split == "valid") {
      ++valid_rows;
      best_seen = std::max(best_seen, row.mrr);
    }
    CHECK(row.hits1 <= row.hits3);
    CHECK(row.hits3 <= row.hits10);
    CHECK(std::isfinite(row.mean_loss));
  }
  CHECK(train_rows == 3);
  CHECK(valid_rows == 3);
  CHECK(result.best_valid_mrr == doctest::Approx(best_seen));
  CHECK(result.best_epoch % 2 == 0);
}

TEST_CASE("tied biases stay tied") {
  const KnowledgeGraph g = synth::tree_closure_graph(2, 2);
  TrainConfig cfg;
  cfg.geometry = GeometryKind::Poincare(1.0);
  cfg.dim = 3;
  cfg.learning_rate = 5.0;
  cfg.batch_size = 8;
  cfg.negatives = 3;
  cfg.epochs = 4;
  cfg.eval_every = 4;
  cfg.seed = 6;
  cfg.tied_biases = true;
  const TrainResult result = train(g, cfg);
  CHECK(result.params.bias_subject == result.params.bias_object);
  bool moved = false;
  for (double v : result.params.bias_subject) moved |= (v != 0.0);
  CHECK(moved);
}

TEST_CASE("config validation") {
  const KnowledgeGraph g = one_triple_graph();
  TrainConfig cfg;
  cfg.batch_size = 3;  // augmented set has 2 triples
  CHECK_THROWS_AS(train(g, cfg), std::invalid_argument);
  cfg.batch_size = 2;
  cfg.negatives = 0;
  CHECK_THROWS_AS(train(g, cfg), std::invalid_argument);
  cfg.negatives = 1;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(train(g, cfg), std::invalid_argument);
}

TEST_CASE("tree closure memorizes to high training MRR") {
  const KnowledgeGraph g = synth::tree_closure_graph(4, 3);  // 85 nodes
  for (auto geo : {GeometryKind::Euclidean(), GeometryKind::Poincare(1.0)}) {
    TrainConfig cfg;
    cfg.geometry = geo;
    cfg.dim = 5;
    cfg.learning_rate = 50.0;
    cfg.batch_size = 128;
    cfg.negatives = 50;
    cfg.epochs = 200;
    cfg.eval_every = 200;
    cfg.seed = 15;
    const TrainResult result = train(g, cfg);
    REQUIRE_FALSE(result.trace.empty());
    CHECK(result.trace.back().split == "train");
    CHECK(result.trace.back().mrr >= 0.9);
  }
}
