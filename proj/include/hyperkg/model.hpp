#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hyperkg/geometry.hpp"

namespace hyperkg {

enum class Geometry : uint32_t { euclidean = 0, poincare = 1 };

struct GeometryKind {
  Geometry kind = Geometry::euclidean;
  double curvature = 0.0;  // > 0 iff poincare

  static GeometryKind Euclidean() { return {Geometry::euclidean, 0.0}; }
  static GeometryKind Poincare(double c);
  bool is_poincare() const { return kind == Geometry::poincare; }
  Curvature ball() const;  // throws for the Euclidean geometry
};

/// Shared parameter container for the Euclidean and Poincare-ball score
/// functions. Relation count includes the reciprocal relations; under the
/// ball geometry every entity row and relation translation stays strictly
/// inside the ball.
struct ModelParams {
  GeometryKind geometry;
  int32_t n_entities = 0;
  int32_t n_relations = 0;
  int32_t dim = 0;
  std::vector<double> entity_emb;    // n_entities x dim
  std::vector<double> rel_diag;      // n_relations x dim
  std::vector<double> rel_trans;     // n_relations x dim
  std::vector<double> bias_subject;  // n_entities
  std::vector<double> bias_object;   // n_entities

  std::span<double> entity(int32_t e) { return {entity_emb.data() + size_t(e) * dim, size_t(dim)}; }
  std::span<const double> entity(int32_t e) const { return {entity_emb.data() + size_t(e) * dim, size_t(dim)}; }
  std::span<double> diag(int32_t r) { return {rel_diag.data() + size_t(r) * dim, size_t(dim)}; }
  std::span<const double> diag(int32_t r) const { return {rel_diag.data() + size_t(r) * dim, size_t(dim)}; }
  std::span<double> trans(int32_t r) { return {rel_trans.data() + size_t(r) * dim, size_t(dim)}; }
  std::span<const double> trans(int32_t r) const { return {rel_trans.data() + size_t(r) * dim, size_t(dim)}; }

  /// Embeddings uniform in (-init_scale, init_scale) per component, relation
  /// diagonals at one (identity transform), biases at zero.
  static ModelParams init(GeometryKind geometry, int32_t n_entities,
                          int32_t n_relations, int32_t dim, double init_scale,
                          std::mt19937_64& rng);

  void check_entity(int32_t e) const;
  void check_relation(int32_t r) const;
};

double sigmoid(double x);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Score phi of a triple under the container's geometry; probability of the
/// fact is sigmoid(phi).
double score(const ModelParams& params, int32_t s, int32_t r, int32_t o);
double score_mure(const ModelParams& params, int32_t s, int32_t r, int32_t o);
double score_murp(const ModelParams& params, int32_t s, int32_t r, int32_t o);

/// Ambient (Euclidean) per-sample gradients of the Bernoulli negative
/// log-likelihood at one labeled triple. The caller applies the Riemannian
/// rescaling for ball-constrained parameters.
struct ScoreGradients {
  double phi = 0.0;
  double loss = 0.0;
  double d_bias_subject = 0.0;
  double d_bias_object = 0.0;
  std::vector<double> d_entity_subject;
  std::vector<double> d_entity_object;
  std::vector<double> d_rel_diag;
  std::vector<double> d_rel_trans;
};

struct ScoreGradWorkspace {
  std::vector<double> v, z, p, q, grad_p, grad_q, up, uz;
  void resize(int32_t dim);
};

ScoreGradients score_gradients(const ModelParams& params, int32_t s, int32_t r,
                               int32_t o, double label);
void score_gradients(const ModelParams& params, int32_t s, int32_t r, int32_t o,
                     double label, ScoreGradWorkspace& work, ScoreGradients& out);

// ---------------------------------------------------------------------------
// Checkpoint file: "MKGE" magic, u32 version, u32 geometry tag, f64 curvature,
// u64 n_entities/n_relations/dim, the five parameter arrays as little-endian
// f64 in row-major order, then entity and relation vocabularies as
// u32-length-prefixed UTF-8 strings in id order.

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hyperkg
