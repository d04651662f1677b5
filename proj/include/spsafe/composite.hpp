#pragma once

#include "spsafe/cbf.hpp"
#include "spsafe/core.hpp"

#include <optional>

namespace spsafe {

/// Boundary-layer Lyapunov certificate: b1|z|^2 <= U(z) <= b2|z|^2,
/// grad_U' g_bl <= -b3|z|^2, |grad_U| <= b4|z|.
struct LyapunovCertificate {
  std::function<double(const Vec& z_tilde)> U;
  std::function<Vec(const Vec& z_tilde)> grad_U;
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  double b4 = 0.0;
  Mat P;  // populated by the quadratic constructor
};

/// Lipschitz and supremum bounds estimated over the sampling domain.
/// The coupling constants are recomputed from the stored bounds, never
/// stored separately.
struct ConstantSet {
  double l_f = 0.0;
  double l_g = 0.0;
  double l_h = 0.0;
  double l_rs = 0.0;
  double l_zeq_pi = 0.0;
  double l_pi = 0.0;
  double l_alpha = 0.0;

  double k1(double b4) const { return l_h * l_f + b4 * l_zeq_pi * l_rs; }
  double k2(double b4) const { return b4 * l_zeq_pi * l_f; }
};

/// Certified timescale bound and everything that went into it.
struct EpsilonCertificate {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps_bar = 0.0;
  double nu = 0.5;
  double eta = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  ConstantSet constants;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;
  bool valid = false;
};

/// Fast equilibrium branch under the closed-loop policy.
Vec zeq_pi(const SlowFastSystem& sys, const Controller& ctrl, const Vec& x);

/// Composite barrier V(x,z) = h(x) - U(z - z_eq(x, pi(x))).
double composite_cbf(const Barrier& bar, const LyapunovCertificate& cert,
                     const SlowFastSystem& sys, const Controller& ctrl,
                     const Vec& x, const Vec& z);

bool in_Cv(const Barrier& bar, const LyapunovCertificate& cert,
           const SlowFastSystem& sys, const Controller& ctrl, const Vec& x,
           const Vec& z, double tol = 0.0);

/// Quadratic certificate U = z'Pz from the linear boundary-layer matrix:
/// P solves A'P + PA = -I (vectorized Kronecker solve). Throws
/// CertificateError when A is not Hurwitz.
LyapunovCertificate quadratic_certificate(const Mat& a_bl);

/// Grid suprema of the bounds entering the timescale certificate, inflated
/// by a safety factor to absorb sampling gaps. Points with h(x) < 0 are
/// excluded from the safe-set suprema; Jacobian bounds for f and g sweep the
/// full (x,z,u) domain.
ConstantSet estimate_constants(const SlowFastSystem& sys, const Controller& ctrl,
                               const Barrier& bar, const Domain& dom, int grid,
                               double inflation = 1.1);

/// Appendix chain: eps1 = nu*b3/K2, eps2 = min(eps1, 4*eta*nu*b3/(K1^2+4*eta*K2)),
/// eps_bar = min(eps2, (1-nu)*b3/(L_alpha*b2)). Ratios with zero denominators
/// drop out as +infinity.
EpsilonCertificate epsilon_bar(const ConstantSet& consts,
                               const LyapunovCertificate& cert, double eta,
                               double nu = 0.5);

/// Initial conditions inside the composite set: the slow state is drawn
/// uniformly over the domain box and kept when h >= 0, the fast state is
/// drawn around the closed-loop equilibrium branch inside the energy box
/// that circumscribes U <= h, and the pair is kept when V >= 0. May return
/// fewer than requested; callers read the actual count.
std::vector<std::pair<Vec, Vec>> sample_ic_in_Cv(
    const SlowFastSystem& sys, const Controller& ctrl, const Barrier& bar,
    const LyapunovCertificate& cert, const Domain& dom, int n_samples,
    std::uint64_t seed, std::size_t max_attempts);

}  // namespace spsafe
