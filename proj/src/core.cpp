#include "spsafe/core.hpp"

#include <cmath>
#include <limits>

namespace spsafe {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

// Tensor grids are capped at 2^20 points; beyond that sampling switches to
// a Halton sequence whose length grows as grid^2 instead of grid^dim.
constexpr std::size_t kTensorCap = std::size_t{1} << 20;

double radical_inverse(std::uint64_t base, std::uint64_t k) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                     23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

bool Box::contains(const Vec& p, double tol) const {
  if (p.size() != lo.size()) return false;
  for (int i = 0; i < dim(); ++i)
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  return true;
}

double eval_class_k(const ClassK& alpha, double s) { return alpha(s); }

Controller plain_controller(std::function<Vec(const Vec&)> pi, double lipschitz,
                            int n_input) {
  Controller c;
  c.policy = [fn = std::move(pi)](const Vec& x) {
    return ControlSample{fn(x), false};
  };
  c.lipschitz = lipschitz;
  c.n_input = n_input;
  return c;
}

std::pair<Vec, Vec> full_dynamics(const SlowFastSystem& sys, const Vec& x,
                                  const Vec& z, const Vec& u, double eps) {
  require(x.size() == sys.n_slow, "full_dynamics: slow state size");
  require(z.size() == sys.n_fast, "full_dynamics: fast state size");
  require(u.size() == sys.n_input, "full_dynamics: input size");
  if (!(eps > 0.0)) throw DomainError("full_dynamics: eps must be positive");
  Vec xdot = sys.f(x, z, u);
  Vec zdot(sys.n_fast);
  if (sys.n_fast > 0) zdot = sys.g(z, x, u) / eps;
  return {std::move(xdot), std::move(zdot)};
}

Vec reduced_dynamics(const SlowFastSystem& sys, const Vec& x, const Vec& u) {
  require(x.size() == sys.n_slow, "reduced_dynamics: slow state size");
  require(u.size() == sys.n_input, "reduced_dynamics: input size");
  if (sys.n_fast == 0) return sys.f(x, Vec(0), u);
  return sys.f(x, sys.z_eq(x, u), u);
}

Vec boundary_layer_dynamics(const SlowFastSystem& sys, const Vec& z_tilde,
                            const Vec& xbar, const Vec& ubar) {
  require(z_tilde.size() == sys.n_fast, "boundary_layer: fast error size");
  require(xbar.size() == sys.n_slow, "boundary_layer: frozen state size");
  require(ubar.size() == sys.n_input, "boundary_layer: frozen input size");
  return sys.g(z_tilde + sys.z_eq(xbar, ubar), xbar, ubar);
}

std::vector<Vec> grid_points(const Box& box, int per_axis) {
  if (per_axis < 2) throw DomainError("grid_points: need at least 2 per axis");
  const int d = box.dim();
  if (d == 0) return {Vec(0)};
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
  std::vector<Vec> pts;
  pts.reserve(total);
  std::vector<int> idx(d, 0);
  Vec p(d);
  for (std::size_t k = 0; k < total; ++k) {
    for (int i = 0; i < d; ++i)
      p[i] = box.lo[i] + box.width(i) * idx[i] / (per_axis - 1);
    pts.push_back(p);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
  }
  return pts;
}

std::vector<Vec> halton_points(const Box& box, std::size_t n) {
  const int d = box.dim();
  if (d > static_cast<int>(std::size(kPrimes)))
    throw DomainError("halton_points: dimension too large");
  std::vector<Vec> pts;
  pts.reserve(n);
  Vec p(d);
  for (std::size_t k = 1; k <= n; ++k) {
    for (int i = 0; i < d; ++i)
      p[i] = box.lo[i] + box.width(i) * radical_inverse(kPrimes[i], k);
    pts.push_back(p);
  }
  return pts;
}

std::size_t sample_count(const Box& box, int grid) {
  const int d = box.dim();
  if (d == 0) return 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::size_t>(grid);
    if (total > kTensorCap)
      return static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid);
  }
  return total;
}

std::vector<Vec> sample_box(const Box& box, int grid) {
  const int d = box.dim();
  if (d == 0) return {Vec(0)};
  std::size_t total = 1;
  bool overflow = false;
  for (int i = 0; i < d; ++i) {
    total *= static_cast<std::size_t>(grid);
    if (total > kTensorCap) {
      overflow = true;
      break;
    }
  }
  if (!overflow) return grid_points(box, grid);
  return halton_points(box, static_cast<std::size_t>(grid) *
                                static_cast<std::size_t>(grid));
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& at,
                const Vec& steps) {
  require(steps.size() == at.size(), "fd_jacobian: step vector size");
  Vec hi = at;
  Vec lo = at;
  Mat J;
  for (int j = 0; j < at.size(); ++j) {
    const double h = steps[j];
    hi[j] = at[j] + h;
    lo[j] = at[j] - h;
    Vec diff = (fn(hi) - fn(lo)) / (2.0 * h);
    if (J.size() == 0) J.resize(diff.size(), at.size());
    J.col(j) = diff;
    hi[j] = at[j];
    lo[j] = at[j];
  }
  if (J.size() == 0) J.resize(0, at.size());
  return J;
}

Vec fd_steps(const Box& box, double rel) {
  Vec s(box.dim());
  for (int i = 0; i < box.dim(); ++i)
    s[i] = std::max(rel * box.width(i), 1e-9);
  return s;
}

double uniform01(std::mt19937_64& rng) {
  // 53 random bits in (0,1); never returns 0 or 1 exactly.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double uniform_in(double lo, double hi, std::mt19937_64& rng) {
  return lo + (hi - lo) * uniform01(rng);
}

Vec uniform_in(const Box& box, std::mt19937_64& rng) {
  Vec p(box.dim());
  for (int i = 0; i < box.dim(); ++i) p[i] = uniform_in(box.lo[i], box.hi[i], rng);
  return p;
}

}  // namespace spsafe
