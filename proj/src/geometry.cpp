#include "hyperkg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyperkg {

namespace {

thread_local std::vector<double> tl_buf_a;
thread_local std::vector<double> tl_buf_b;

std::span<double> scratch(std::vector<double>& buf, size_t n) {
  if (buf.size() < n) buf.resize(n);
  return std::span<double>(buf.data(), n);
}

double clamp_artanh(double a) { return std::min(a, 1.0 - kEpsClamp); }

bool same_point(std::span<const double> x, std::span<const double> y) {
  return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

// (-x) (+)_c y, without the boundary projection. Safe when out aliases x or y.
void mobius_add_neg_raw(std::span<const double> x, std::span<const double> y,
                        double c, std::span<double> out) {
  const double xy = dot(x, y);
  const double xx = norm_sq(x);
  const double yy = norm_sq(y);
  const double a = 1.0 - 2.0 * c * xy + c * yy;
  const double b = 1.0 - c * xx;
  const double den = 1.0 - 2.0 * c * xy + c * c * xx * yy;
  for (size_t i = 0; i < out.size(); ++i) out[i] = (-a * x[i] + b * y[i]) / den;
}

}  // namespace

Curvature::Curvature(double value) : c(value) {
  if (!(value > 0.0)) throw std::invalid_argument("curvature must be positive");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

double conformal_factor(std::span<const double> x, Curvature c) {
  return 2.0 / (1.0 - c.c * norm_sq(x));
}

void project_to_ball(std::span<double> x, Curvature c) {
  const double sc = std::sqrt(c.c);
  const double n = norm(x);
  if (sc * n >= 1.0 - kEpsBall) {
    const double f = (1.0 - kEpsBall) / (sc * n);
    for (double& v : x) v *= f;
  }
}

bool inside_ball(std::span<const double> x, Curvature c) {
  const double q = c.c * norm_sq(x);
  return std::isfinite(q) && q < 1.0;
}

void mobius_add(std::span<const double> x, std::span<const double> y,
                Curvature c, std::span<double> out) {
  const double cc = c.c;
  const double xy = dot(x, y);
  const double xx = norm_sq(x);
  const double yy = norm_sq(y);
  const double a = 1.0 + 2.0 * cc * xy + cc * yy;
  const double b = 1.0 - cc * xx;
  const double den = 1.0 + 2.0 * cc * xy + cc * cc * xx * yy;
  for (size_t i = 0; i < out.size(); ++i) out[i] = (a * x[i] + b * y[i]) / den;
  project_to_ball(out, c);
}

double poincare_distance(std::span<const double> x, std::span<const double> y,
                         Curvature c) {
  if (same_point(x, y)) return 0.0;
  auto w = scratch(tl_buf_a, x.size());
  mobius_add_neg_raw(x, y, c.c, w);
  const double sc = std::sqrt(c.c);
  const double arg = clamp_artanh(sc * norm(w));
  return 2.0 / sc * std::atanh(arg);
}

void exp_map(std::span<const double> x, std::span<const double> v,
             Curvature c, std::span<double> out) {
  const double n = norm(v);
  if (n < kEpsZero) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const double sc = std::sqrt(c.c);
  const double lam = conformal_factor(x, c);
  const double f = std::tanh(sc * lam * n / 2.0) / (sc * n);
  auto t = scratch(tl_buf_a, v.size());
  for (size_t i = 0; i < v.size(); ++i) t[i] = f * v[i];
  mobius_add(x, t, c, out);
}

void log_map(std::span<const double> x, std::span<const double> y,
             Curvature c, std::span<double> out) {
  if (same_point(x, y)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  auto w = scratch(tl_buf_a, x.size());
  mobius_add_neg_raw(x, y, c.c, w);
  const double n = norm(w);
  if (n < kEpsZero) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double sc = std::sqrt(c.c);
  const double lam = conformal_factor(x, c);
  const double f = 2.0 / (sc * lam) * std::atanh(clamp_artanh(sc * n)) / n;
  for (size_t i = 0; i < out.size(); ++i) out[i] = f * w[i];
}

void exp_map_origin(std::span<const double> v, Curvature c, std::span<double> out) {
  const double n = norm(v);
  if (n < kEpsZero) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double sc = std::sqrt(c.c);
  const double f = std::tanh(sc * n) / (sc * n);
  for (size_t i = 0; i < out.size(); ++i) out[i] = f * v[i];
  project_to_ball(out, c);
}

void log_map_origin(std::span<const double> y, Curvature c, std::span<double> out) {
  const double n = norm(y);
  if (n < kEpsZero) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double sc = std::sqrt(c.c);
  const double f = std::atanh(clamp_artanh(sc * n)) / (sc * n);
  for (size_t i = 0; i < out.size(); ++i) out[i] = f * y[i];
}

void mobius_matvec(std::span<const double> diag, std::span<const double> x,
                   Curvature c, std::span<double> out) {
  auto t = scratch(tl_buf_b, x.size());
  log_map_origin(x, c, t);
  for (size_t i = 0; i < t.size(); ++i) t[i] *= diag[i];
  exp_map_origin(t, c, out);
}

void riemannian_scale(std::span<const double> grad, std::span<const double> x,
                      Curvature c, std::span<double> out) {
  const double lam = conformal_factor(x, c);
  const double f = 1.0 / (lam * lam);
  for (size_t i = 0; i < out.size(); ++i) out[i] = f * grad[i];
}

void mobius_add_vjp(std::span<const double> x, std::span<const double> y,
                    Curvature c, std::span<const double> u,
                    std::span<double> grad_x, std::span<double> grad_y) {
  const double cc = c.c;
  const double xy = dot(x, y);
  const double xx = norm_sq(x);
  const double yy = norm_sq(y);
  const double a = 1.0 + 2.0 * cc * xy + cc * yy;
  const double b = 1.0 - cc * xx;
  const double den = 1.0 + 2.0 * cc * xy + cc * cc * xx * yy;
  const double ux = dot(u, x);
  const double uy = dot(u, y);
  const double uw = (a * ux + b * uy) / den;
  for (size_t i = 0; i < u.size(); ++i) {
    grad_x[i] = (a * u[i] + 2.0 * cc * y[i] * ux - 2.0 * cc * x[i] * uy -
                 (2.0 * cc * y[i] + 2.0 * cc * cc * yy * x[i]) * uw) /
                den;
    grad_y[i] = (b * u[i] + 2.0 * cc * (x[i] + y[i]) * ux -
                 (2.0 * cc * x[i] + 2.0 * cc * cc * xx * y[i]) * uw) /
                den;
  }
}

void exp_map_origin_vjp(std::span<const double> v, Curvature c,
                        std::span<const double> u, std::span<double> grad_v) {
  const double cc = c.c;
  const double n = norm(v);
  double f, fp_over_n;
  if (n < 1e-3) {
    // series of tanh(s*n)/(s*n) around 0; avoids cancellation in f'(n)/n
    f = 1.0 - cc * n * n / 3.0 + 2.0 * cc * cc * n * n * n * n / 15.0;
    fp_over_n = -2.0 * cc / 3.0 + 8.0 * cc * cc * n * n / 15.0;
  } else {
    const double sc = std::sqrt(cc);
    const double th = std::tanh(sc * n);
    f = th / (sc * n);
    fp_over_n = (1.0 - th * th) / (n * n) - th / (sc * n * n * n);
  }
  const double vu = dot(v, u);
  for (size_t i = 0; i < u.size(); ++i)
    grad_v[i] = f * u[i] + fp_over_n * vu * v[i];
}

void log_map_origin_vjp(std::span<const double> y, Curvature c,
                        std::span<const double> u, std::span<double> grad_y) {
  const double cc = c.c;
  const double n = norm(y);
  double g, gp_over_n;
  if (n < 1e-3) {
    g = 1.0 + cc * n * n / 3.0 + cc * cc * n * n * n * n / 5.0;
    gp_over_n = 2.0 * cc / 3.0 + 4.0 * cc * cc * n * n / 5.0;
  } else {
    const double sc = std::sqrt(cc);
    const double at = std::atanh(clamp_artanh(sc * n));
    g = at / (sc * n);
    gp_over_n = 1.0 / (n * n * (1.0 - cc * n * n)) - at / (sc * n * n * n);
  }
  const double yu = dot(y, u);
  for (size_t i = 0; i < u.size(); ++i)
    grad_y[i] = g * u[i] + gp_over_n * yu * y[i];
}

void distance_sq_grad(std::span<const double> x, std::span<const double> y,
                      Curvature c, std::span<double> grad_x,
                      std::span<double> grad_y, double* distance_out) {
  if (same_point(x, y)) {
    std::fill(grad_x.begin(), grad_x.end(), 0.0);
    std::fill(grad_y.begin(), grad_y.end(), 0.0);
    if (distance_out) *distance_out = 0.0;
    return;
  }
  const double cc = c.c;
  const double sc = std::sqrt(cc);
  auto w = scratch(tl_buf_a, x.size());
  mobius_add_neg_raw(x, y, cc, w);
  const double n = norm(w);
  const double dist = 2.0 / sc * std::atanh(clamp_artanh(sc * n));
  if (distance_out) *distance_out = dist;
  // d(D^2)/dw = 4 D / ((1 - c n^2) n) * w; the factor tends to 8 as w -> 0
  const double factor =
      (n < kEpsZero) ? 8.0 : 4.0 * dist / ((1.0 - cc * n * n) * n);
  for (size_t i = 0; i < w.size(); ++i) w[i] *= factor;
  auto neg_x = scratch(tl_buf_b, x.size());
  for (size_t i = 0; i < x.size(); ++i) neg_x[i] = -x[i];
  mobius_add_vjp(neg_x, y, c, w, grad_x, grad_y);
  for (size_t i = 0; i < grad_x.size(); ++i) grad_x[i] = -grad_x[i];
}

}  // namespace hyperkg
