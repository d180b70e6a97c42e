#include "hyperkg/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <type_traits>

namespace hyperkg {

GeometryKind GeometryKind::Poincare(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("poincare geometry needs curvature > 0");
  return {Geometry::poincare, c};
}

Curvature GeometryKind::ball() const {
  if (!is_poincare())
    throw std::logic_error("ball() called on a Euclidean geometry");
  return Curvature(curvature);
}

ModelParams ModelParams::init(GeometryKind geometry, int32_t n_entities,
                              int32_t n_relations, int32_t dim,
                              double init_scale, std::mt19937_64& rng) {
  if (n_entities <= 0 || n_relations <= 0 || dim <= 0)
    throw std::invalid_argument("model dimensions must be positive");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be positive");
  ModelParams p;
  p.geometry = geometry;
  p.n_entities = n_entities;
  p.n_relations = n_relations;
  p.dim = dim;
  p.entity_emb.resize(size_t(n_entities) * dim);
  p.rel_diag.assign(size_t(n_relations) * dim, 1.0);
  p.rel_trans.resize(size_t(n_relations) * dim);
  p.bias_subject.assign(n_entities, 0.0);
  p.bias_object.assign(n_entities, 0.0);
  std::uniform_real_distribution<double> u(-init_scale, init_scale);
  for (double& v : p.entity_emb) v = u(rng);
  for (double& v : p.rel_trans) v = u(rng);
  return p;
}

void ModelParams::check_entity(int32_t e) const {
  if (e < 0 || e >= n_entities)
    throw std::out_of_range("entity id " + std::to_string(e) + " out of range [0, " +
                            std::to_string(n_entities) + ")");
}

void ModelParams::check_relation(int32_t r) const {
  if (r < 0 || r >= n_relations)
    throw std::out_of_range("relation id " + std::to_string(r) +
                            " out of range [0, " + std::to_string(n_relations) + ")");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double score_mure(const ModelParams& params, int32_t s, int32_t r, int32_t o) {
  params.check_entity(s);
  params.check_entity(o);
  params.check_relation(r);
  const auto es = params.entity(s);
  const auto eo = params.entity(o);
  const auto d = params.diag(r);
  const auto t = params.trans(r);
  double dist_sq = 0.0;
  for (int32_t i = 0; i < params.dim; ++i) {
    const double u = d[i] * es[i] - (eo[i] + t[i]);
    dist_sq += u * u;
  }
  return -dist_sq + params.bias_subject[s] + params.bias_object[o];
}

double score_murp(const ModelParams& params, int32_t s, int32_t r, int32_t o) {
  params.check_entity(s);
  params.check_entity(o);
  params.check_relation(r);
  const Curvature c = params.geometry.ball();
  const size_t dim = params.dim;
  std::vector<double> p(dim), q(dim);
  mobius_matvec(params.diag(r), params.entity(s), c, p);
  mobius_add(params.entity(o), params.trans(r), c, q);
  const double dist = poincare_distance(p, q, c);
  return -dist * dist + params.bias_subject[s] + params.bias_object[o];
}

double score(const ModelParams& params, int32_t s, int32_t r, int32_t o) {
  return params.geometry.is_poincare() ? score_murp(params, s, r, o)
                                       : score_mure(params, s, r, o);
}

void ScoreGradWorkspace::resize(int32_t dim) {
  const size_t d = dim;
  for (auto* vec : {&v, &z, &p, &q, &grad_p, &grad_q, &up, &uz}) vec->resize(d);
}

ScoreGradients score_gradients(const ModelParams& params, int32_t s, int32_t r,
                               int32_t o, double label) {
  ScoreGradWorkspace work;
  ScoreGradients out;
  score_gradients(params, s, r, o, label, work, out);
  return out;
}

void score_gradients(const ModelParams& params, int32_t s, int32_t r, int32_t o,
                     double label, ScoreGradWorkspace& work, ScoreGradients& out) {
  params.check_entity(s);
  params.check_entity(o);
  params.check_relation(r);
  const size_t dim = params.dim;
  work.resize(params.dim);
  out.d_entity_subject.resize(dim);
  out.d_entity_object.resize(dim);
  out.d_rel_diag.resize(dim);
  out.d_rel_trans.resize(dim);

  const auto es = params.entity(s);
  const auto eo = params.entity(o);
  const auto rd = params.diag(r);
  const auto rt = params.trans(r);

  if (!params.geometry.is_poincare()) {
    double dist_sq = 0.0;
    for (size_t i = 0; i < dim; ++i) {
      const double u = rd[i] * es[i] - (eo[i] + rt[i]);
      work.v[i] = u;
      dist_sq += u * u;
    }
    out.phi = -dist_sq + params.bias_subject[s] + params.bias_object[o];
    const double err = sigmoid(out.phi) - label;
    for (size_t i = 0; i < dim; ++i) {
      const double u = work.v[i];
      out.d_entity_subject[i] = err * (-2.0 * rd[i] * u);
      out.d_rel_diag[i] = err * (-2.0 * es[i] * u);
      out.d_entity_object[i] = err * (2.0 * u);
      out.d_rel_trans[i] = err * (2.0 * u);
    }
    out.d_bias_subject = err;
    out.d_bias_object = err;
  } else {
    const Curvature c = params.geometry.ball();
    log_map_origin(es, c, work.v);
    for (size_t i = 0; i < dim; ++i) work.z[i] = rd[i] * work.v[i];
    exp_map_origin(work.z, c, work.p);
    mobius_add(eo, rt, c, work.q);
    double dist = 0.0;
    distance_sq_grad(work.p, work.q, c, work.grad_p, work.grad_q, &dist);
    out.phi = -dist * dist + params.bias_subject[s] + params.bias_object[o];
    const double err = sigmoid(out.phi) - label;
    // dL/dp = -err * d(D^2)/dp, likewise for q
    for (size_t i = 0; i < dim; ++i) {
      work.up[i] = -err * work.grad_p[i];
      work.grad_q[i] *= -err;
    }
    mobius_add_vjp(eo, rt, c, work.grad_q, out.d_entity_object, out.d_rel_trans);
    exp_map_origin_vjp(work.z, c, work.up, work.uz);
    for (size_t i = 0; i < dim; ++i) {
      out.d_rel_diag[i] = work.uz[i] * work.v[i];
      work.uz[i] *= rd[i];  // now dL/dv
    }
    log_map_origin_vjp(es, c, work.uz, out.d_entity_subject);
    out.d_bias_subject = err;
    out.d_bias_object = err;
  }
  out.loss = label * softplus(-out.phi) + (1.0 - label) * softplus(out.phi);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Multi-byte values are written little-endian regardless of
// the host order.

namespace {

constexpr char kMagic[4] = {'M', 'K', 'G', 'E'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void write_f64_array(std::ostream& out, const std::vector<double>& values) {
  for (double v : values) write_le(out, v);
}

void read_f64_array(std::istream& in, std::vector<double>& values, size_t n) {
  values.resize(n);
  for (size_t i = 0; i < n; ++i) values[i] = read_le<double>(in);
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const uint32_t len = read_le<uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  if (static_cast<int32_t>(ckpt.entity_names.size()) != p.n_entities ||
      static_cast<int32_t>(ckpt.relation_names.size()) != p.n_relations)
    throw std::invalid_argument("checkpoint vocabulary sizes do not match parameters");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out.write(kMagic, 4);
    write_le<uint32_t>(out, kCheckpointVersion);
    write_le<uint32_t>(out, static_cast<uint32_t>(p.geometry.kind));
    write_le<double>(out, p.geometry.curvature);
    write_le<uint64_t>(out, static_cast<uint64_t>(p.n_entities));
    write_le<uint64_t>(out, static_cast<uint64_t>(p.n_relations));
    write_le<uint64_t>(out, static_cast<uint64_t>(p.dim));
    write_f64_array(out, p.entity_emb);
    write_f64_array(out, p.rel_diag);
    write_f64_array(out, p.rel_trans);
    write_f64_array(out, p.bias_subject);
    write_f64_array(out, p.bias_object);
    for (const auto& name : ckpt.entity_names) write_string(out, name);
    for (const auto& name : ckpt.relation_names) write_string(out, name);
    if (!out) throw std::runtime_error("write failure: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const uint32_t version = read_le<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ModelParams& p = ckpt.params;
  const uint32_t tag = read_le<uint32_t>(in);
  const double curvature = read_le<double>(in);
  if (tag == 0) {
    p.geometry = GeometryKind::Euclidean();
  } else if (tag == 1) {
    p.geometry = GeometryKind::Poincare(curvature);
  } else {
    throw std::runtime_error("unknown geometry tag " + std::to_string(tag));
  }
  const uint64_t n_e = read_le<uint64_t>(in);
  const uint64_t n_r = read_le<uint64_t>(in);
  const uint64_t dim = read_le<uint64_t>(in);
  if (n_e == 0 || n_r == 0 || dim == 0 || n_e > (1u << 30) || n_r > (1u << 30) ||
      dim > (1u << 20))
    throw std::runtime_error("implausible checkpoint dimensions");
  p.n_entities = static_cast<int32_t>(n_e);
  p.n_relations = static_cast<int32_t>(n_r);
  p.dim = static_cast<int32_t>(dim);
  read_f64_array(in, p.entity_emb, n_e * dim);
  read_f64_array(in, p.rel_diag, n_r * dim);
  read_f64_array(in, p.rel_trans, n_r * dim);
  read_f64_array(in, p.bias_subject, n_e);
  read_f64_array(in, p.bias_object, n_e);
  ckpt.entity_names.reserve(n_e);
  for (uint64_t i = 0; i < n_e; ++i) ckpt.entity_names.push_back(read_string(in));
  ckpt.relation_names.reserve(n_r);
  for (uint64_t i = 0; i < n_r; ++i) ckpt.relation_names.push_back(read_string(in));
  if (p.geometry.is_poincare()) {
    const Curvature c = p.geometry.ball();
    for (int32_t e = 0; e < p.n_entities; ++e) project_to_ball(p.entity(e), c);
    for (int32_t r = 0; r < p.n_relations; ++r) project_to_ball(p.trans(r), c);
  }
  return ckpt;
}

}  // namespace hyperkg
