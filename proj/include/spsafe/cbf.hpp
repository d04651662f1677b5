#pragma once

#include "spsafe/core.hpp"

namespace spsafe {

/// Barrier h with analytic gradient, rate alpha and robustness margin eta.
/// The safe set is the zero-superlevel set of h.
struct Barrier {
  std::function<double(const Vec& x)> h;
  std::function<Vec(const Vec& x)> grad_h;
  ClassK alpha;
  double eta = 0.0;
};

/// Single affine input constraint a'u + b >= 0.
struct AffineConstraint {
  Vec a;
  double b = 0.0;
};

/// Control-affine reduced model xdot = drift(x) + input(x)*u.
struct ReducedAffine {
  std::function<Vec(const Vec& x)> drift;
  std::function<Mat(const Vec& x)> input;
};

/// Robust CBF condition on the reduced model at x, as one affine constraint:
/// a = input(x)' grad_h(x), b = grad_h(x)' drift(x) + alpha(h(x)) - eta.
AffineConstraint constraint_coeffs(const Barrier& bar, const ReducedAffine& model,
                                   const Vec& x);

/// Closest feasible input to u_des (exact projection). An infeasible
/// constraint (a = 0, b < 0) is reported through the sample flag and the
/// nominal input passes through unchanged.
ControlSample safe_filter_hard(const AffineConstraint& c, const Vec& u_des);

/// Smooth variant: the projection's clamped margin is replaced by a softplus
/// of sharpness sigma, so the policy is C^infinity in u_des and the
/// coefficients. Falls back to hard-filter semantics when a = 0.
ControlSample safe_filter_smooth(const AffineConstraint& c, const Vec& u_des,
                                 double sigma = 50.0);

double softplus(double s, double sigma);

/// Position margin on configuration q with analytic first and second
/// derivatives, for velocity lifting.
struct PositionMargin {
  std::function<double(const Vec& q)> value;
  std::function<Vec(const Vec& q)> grad;
  std::function<Mat(const Vec& q)> hess;
};

/// First-order lift h = grad_hbar(q)' omega + gamma*hbar(q); returns the
/// lifted value and its gradient with respect to (q, omega).
std::pair<double, Vec> hocbf_lift(const PositionMargin& m, double gamma,
                                  const Vec& q, const Vec& omega);

/// Soft minimum -(1/rho) log sum exp(-rho v_j), max-shifted so no overflow
/// occurs for |rho*v_j| well beyond 1e4. Always <= min_j v_j and within
/// log(N)/rho of it.
double lse_aggregate(const std::vector<double>& vals, double rho);

/// Gradient of the soft minimum: a softmax-weighted convex combination of
/// the component gradients.
Vec lse_gradient(const std::vector<double>& vals, const std::vector<Vec>& grads,
                 double rho);

}  // namespace spsafe
