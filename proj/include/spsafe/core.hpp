#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spsafe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy. Contract violations are programming errors (wrong sizes),
// the rest are runtime conditions a caller may want to map to exit codes.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CertificateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box used as a compact sampling domain.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double width(int i) const { return hi[i] - lo[i]; }
  bool contains(const Vec& p, double tol = 0.0) const;
  static Box empty() { return Box{Vec(0), Vec(0)}; }
};

/// Sampling domains standing in for the safe set and admissible inputs:
/// slow state, fast state, input.
struct Domain {
  Box x;
  Box z;
  Box u;
};

/// Linear extended class-K rate alpha(s) = gain*s, defined for all s.
struct ClassK {
  double gain = 1.0;

  double operator()(double s) const { return gain * s; }
  double lipschitz() const { return gain; }
};

double eval_class_k(const ClassK& alpha, double s);

/// One policy evaluation. `infeasible` marks a step where the safety filter
/// had no feasible direction and passed the nominal input through unchanged.
struct ControlSample {
  Vec u;
  bool infeasible = false;
};

/// State-feedback policy with a recorded Lipschitz bound.
struct Controller {
  std::function<ControlSample(const Vec& x)> policy;
  double lipschitz = 0.0;
  int n_input = 0;

  Vec operator()(const Vec& x) const { return policy(x).u; }
};

Controller plain_controller(std::function<Vec(const Vec&)> pi, double lipschitz,
                            int n_input);

/// Two-timescale plant: xdot = f(x,z,u), eps*zdot = g(z,x,u).
/// z_eq(x,u) is the fast equilibrium branch, grad_z_eq its Jacobian in (x,u).
struct SlowFastSystem {
  int n_slow = 0;
  int n_fast = 0;
  int n_input = 0;
  std::function<Vec(const Vec& x, const Vec& z, const Vec& u)> f;
  std::function<Vec(const Vec& z, const Vec& x, const Vec& u)> g;
  std::function<Vec(const Vec& x, const Vec& u)> z_eq;
  std::function<Mat(const Vec& x, const Vec& u)> grad_z_eq;
};

/// Slow and fast rates of the interconnection at timescale ratio eps.
/// The fast rate comes back already divided by eps.
std::pair<Vec, Vec> full_dynamics(const SlowFastSystem& sys, const Vec& x,
                                  const Vec& z, const Vec& u, double eps);

/// Slow dynamics with the fast state pinned to its equilibrium branch.
Vec reduced_dynamics(const SlowFastSystem& sys, const Vec& x, const Vec& u);

/// Fast error dynamics in stretched time, around frozen (xbar, ubar).
Vec boundary_layer_dynamics(const SlowFastSystem& sys, const Vec& z_tilde,
                            const Vec& xbar, const Vec& ubar);

// Deterministic sampling. Tensor grids are used while per_axis^dim stays
// below a fixed cap; above it a Halton sequence takes over so the point
// count stays bounded in high dimension. Halton prefixes nest, so growing
// the grid parameter never loses already-sampled points.
std::vector<Vec> grid_points(const Box& box, int per_axis);
std::vector<Vec> halton_points(const Box& box, std::size_t n);
std::vector<Vec> sample_box(const Box& box, int grid);
std::size_t sample_count(const Box& box, int grid);

/// Central-difference Jacobian with per-axis steps.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& at,
                const Vec& steps);

/// Per-axis FD steps as a fraction of box width (floored away from zero).
Vec fd_steps(const Box& box, double rel = 1e-5);

// RNG helpers with engine-level determinism; scaling is done by hand so the
// stream does not depend on the standard library's distribution internals.
double uniform01(std::mt19937_64& rng);
double uniform_in(double lo, double hi, std::mt19937_64& rng);
Vec uniform_in(const Box& box, std::mt19937_64& rng);

}  // namespace spsafe
