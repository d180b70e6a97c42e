#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hyperkg {

// Numerical safeguards. Points are kept strictly inside the ball with a
// relative margin of kEpsBall; artanh arguments are clamped below 1 by
// kEpsClamp; norms below kEpsZero are treated as exact zeros before division.
inline constexpr double kEpsBall = 1e-5;
inline constexpr double kEpsClamp = 1e-15;
inline constexpr double kEpsZero = 1e-15;

/// Curvature c > 0 of a Poincare ball of radius 1/sqrt(c).
struct Curvature {
  double c;
  explicit Curvature(double value);
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
double norm(std::span<const double> a);

/// Conformal factor lambda = 2 / (1 - c*|x|^2). >= 2 inside the ball,
/// grows without bound toward the boundary.
double conformal_factor(std::span<const double> x, Curvature c);

/// Radially rescales x to norm (1 - kEpsBall)/sqrt(c) whenever
/// sqrt(c)*|x| >= 1 - kEpsBall. Every ball-valued result passes through this.
void project_to_ball(std::span<double> x, Curvature c);

bool inside_ball(std::span<const double> x, Curvature c);

/// Mobius addition x (+)_c y. `out` may alias `x` or `y`.
void mobius_add(std::span<const double> x, std::span<const double> y,
                Curvature c, std::span<double> out);

/// Geodesic distance (2/sqrt(c)) * artanh(sqrt(c) * |(-x) (+)_c y|).
double poincare_distance(std::span<const double> x, std::span<const double> y,
                         Curvature c);

/// Exponential map at x: moves from x along tangent vector v.
/// Returns x exactly when |v| < kEpsZero.
void exp_map(std::span<const double> x, std::span<const double> v,
             Curvature c, std::span<double> out);

/// Logarithmic map at x, inverse of exp_map. Returns the zero vector when
/// y coincides with x.
void log_map(std::span<const double> x, std::span<const double> y,
             Curvature c, std::span<double> out);

// Specializations at the origin, where the maps reduce to radial
// tanh / artanh scalings. These carry the Mobius matrix-vector product.
void exp_map_origin(std::span<const double> v, Curvature c, std::span<double> out);
void log_map_origin(std::span<const double> y, Curvature c, std::span<double> out);

/// Mobius matrix-vector multiplication with a diagonal matrix:
/// exp_0(diag .* log_0(x)). Fixes the origin for every diag.
void mobius_matvec(std::span<const double> diag, std::span<const double> x,
                   Curvature c, std::span<double> out);

/// Euclidean-to-Riemannian gradient rescaling: grad / lambda_x^2.
void riemannian_scale(std::span<const double> grad, std::span<const double> x,
                      Curvature c, std::span<double> out);

// Reverse-mode rules for the ball operations, used to assemble analytic
// score gradients. Each takes the upstream gradient `u` with respect to the
// operation output and writes gradients with respect to the inputs.
// Output spans must not alias the inputs.

void mobius_add_vjp(std::span<const double> x, std::span<const double> y,
                    Curvature c, std::span<const double> u,
                    std::span<double> grad_x, std::span<double> grad_y);

void exp_map_origin_vjp(std::span<const double> v, Curvature c,
                        std::span<const double> u, std::span<double> grad_v);

void log_map_origin_vjp(std::span<const double> y, Curvature c,
                        std::span<const double> u, std::span<double> grad_y);

/// Gradient of the squared distance d_B(x, y)^2 with respect to both
/// arguments. Optionally reports the distance itself through `distance_out`.
void distance_sq_grad(std::span<const double> x, std::span<const double> y,
                      Curvature c, std::span<double> grad_x,
                      std::span<double> grad_y, double* distance_out = nullptr);

}  // namespace hyperkg
