#include "spsafe/composite.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace spsafe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double op_norm(const Mat& j) {
  if (j.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(j);
  return svd.singularValues()(0);
}

Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

}  // namespace

Vec zeq_pi(const SlowFastSystem& sys, const Controller& ctrl, const Vec& x) {
  return sys.z_eq(x, ctrl(x));
}

double composite_cbf(const Barrier& bar, const LyapunovCertificate& cert,
                     const SlowFastSystem& sys, const Controller& ctrl,
                     const Vec& x, const Vec& z) {
  return bar.h(x) - cert.U(z - zeq_pi(sys, ctrl, x));
}

bool in_Cv(const Barrier& bar, const LyapunovCertificate& cert,
           const SlowFastSystem& sys, const Controller& ctrl, const Vec& x,
           const Vec& z, double tol) {
  return composite_cbf(bar, cert, sys, ctrl, x, z) >= -tol;
}

LyapunovCertificate quadratic_certificate(const Mat& a_bl) {
  if (a_bl.rows() != a_bl.cols() || a_bl.rows() == 0)
    throw ContractViolation("quadratic_certificate: square matrix required");
  const int p = static_cast<int>(a_bl.rows());

  Eigen::EigenSolver<Mat> es(a_bl);
  for (int i = 0; i < p; ++i)
    if (es.eigenvalues()[i].real() >= 0.0)
      throw CertificateError("quadratic_certificate: boundary layer not Hurwitz");

  // A'P + PA = -I, vectorized: (I kron A' + A' kron I) vec(P) = -vec(I).
  const Mat at = a_bl.transpose();
  const Mat ip = Mat::Identity(p, p);
  const Mat lhs = kron(ip, at) + kron(at, ip);
  Vec rhs(p * p);
  Eigen::Map<Mat>(rhs.data(), p, p) = -ip;
  Vec vec_p = lhs.householderQr().solve(rhs);
  Mat pm = Eigen::Map<Mat>(vec_p.data(), p, p);
  pm = 0.5 * (pm + pm.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> ps(pm);
  const double lmin = ps.eigenvalues().minCoeff();
  const double lmax = ps.eigenvalues().maxCoeff();
  if (!(lmin > 0.0))
    throw CertificateError("quadratic_certificate: solution not positive definite");

  LyapunovCertificate cert;
  cert.P = pm;
  cert.U = [pm](const Vec& zt) { return zt.dot(pm * zt); };
  cert.grad_U = [pm](const Vec& zt) -> Vec { return 2.0 * (pm * zt); };
  cert.b1 = lmin;
  cert.b2 = lmax;
  cert.b3 = 1.0;
  cert.b4 = 2.0 * lmax;
  return cert;
}

ConstantSet estimate_constants(const SlowFastSystem& sys, const Controller& ctrl,
                               const Barrier& bar, const Domain& dom, int grid,
                               double inflation) {
  if (grid < 2) throw DomainError("estimate_constants: grid too small");
  if (!(inflation >= 1.0))
    throw DomainError("estimate_constants: inflation factor below 1");

  std::vector<Vec> safe;
  for (const Vec& x : sample_box(dom.x, grid))
    if (bar.h(x) >= 0.0) safe.push_back(x);
  if (safe.empty())
    throw EstimationError("estimate_constants: no safe samples in the domain box");

  const Vec steps_x = fd_steps(dom.x);
  ConstantSet cs;
  cs.l_alpha = bar.alpha.lipschitz();

  for (const Vec& x : safe) {
    cs.l_h = std::max(cs.l_h, bar.grad_h(x).norm());
    const Vec u = ctrl(x);
    cs.l_rs = std::max(cs.l_rs, reduced_dynamics(sys, x, u).norm());
    cs.l_pi = std::max(
        cs.l_pi, op_norm(fd_jacobian([&](const Vec& p) { return ctrl(p); }, x,
                                     steps_x)));
    if (sys.n_fast > 0)
      cs.l_zeq_pi = std::max(
          cs.l_zeq_pi,
          op_norm(fd_jacobian([&](const Vec& p) { return zeq_pi(sys, ctrl, p); },
                              x, steps_x)));
  }

  // Jacobian bounds for f and g sweep the full joint box, not just the safe set.
  const int n = sys.n_slow, p = sys.n_fast, m = sys.n_input;
  Box joint;
  joint.lo = Vec(n + p + m);
  joint.hi = Vec(n + p + m);
  joint.lo << dom.x.lo, dom.z.lo, dom.u.lo;
  joint.hi << dom.x.hi, dom.z.hi, dom.u.hi;
  const Vec steps_joint = fd_steps(joint);

  for (const Vec& w : sample_box(joint, grid)) {
    const Vec x = w.head(n), z = w.segment(n, p), u = w.tail(m);
    cs.l_f = std::max(
        cs.l_f, op_norm(fd_jacobian(
                    [&](const Vec& v) {
                      return sys.f(v.head(n), v.segment(n, p), v.tail(m));
                    },
                    w, steps_joint)));
    if (p > 0)
      cs.l_g = std::max(
          cs.l_g, op_norm(fd_jacobian(
                      [&](const Vec& v) {
                        return sys.g(v.segment(n, p), v.head(n), v.tail(m));
                      },
                      w, steps_joint)));
  }

  cs.l_f *= inflation;
  cs.l_g *= inflation;
  cs.l_h *= inflation;
  cs.l_rs *= inflation;
  cs.l_zeq_pi *= inflation;
  cs.l_pi *= inflation;
  return cs;
}

EpsilonCertificate epsilon_bar(const ConstantSet& consts,
                               const LyapunovCertificate& cert, double eta,
                               double nu) {
  if (!(nu > 0.0 && nu < 1.0))
    throw DomainError("epsilon_bar: nu must lie in (0,1)");
  if (!(eta >= 0.0)) throw DomainError("epsilon_bar: eta must be nonnegative");

  const auto ratio = [](double num, double den) {
    return den > 0.0 ? num / den : kInf;
  };

  EpsilonCertificate ec;
  ec.nu = nu;
  ec.eta = eta;
  ec.constants = consts;
  ec.b1 = cert.b1;
  ec.b2 = cert.b2;
  ec.b3 = cert.b3;
  ec.b4 = cert.b4;
  ec.k1 = consts.k1(cert.b4);
  ec.k2 = consts.k2(cert.b4);

  ec.eps1 = ratio(nu * cert.b3, ec.k2);
  ec.eps2 = std::min(ec.eps1, ratio(4.0 * eta * nu * cert.b3,
                                    ec.k1 * ec.k1 + 4.0 * eta * ec.k2));
  ec.eps_bar =
      std::min(ec.eps2, ratio((1.0 - nu) * cert.b3, consts.l_alpha * cert.b2));
  ec.valid = std::isfinite(ec.eps_bar) && ec.eps_bar > 0.0;
  return ec;
}

std::vector<std::pair<Vec, Vec>> sample_ic_in_Cv(
    const SlowFastSystem& sys, const Controller& ctrl, const Barrier& bar,
    const LyapunovCertificate& cert, const Domain& dom, int n_samples,
    std::uint64_t seed, std::size_t max_attempts) {
  std::vector<std::pair<Vec, Vec>> out;
  if (n_samples <= 0) return out;
  std::mt19937_64 rng(seed);
  const int p = sys.n_fast;
  for (std::size_t k = 0; k < max_attempts; ++k) {
    Vec x = uniform_in(dom.x, rng);
    const double h = bar.h(x);
    if (h < 0.0) continue;
    // The sublevel set U <= h lies inside |z_tilde|_inf <= sqrt(h/b1), so
    // drawing the fast error there and rejecting on the exact membership
    // test keeps the acceptance rate bounded even when the z sampling box
    // is far wider than the composite set.
    Vec z;
    if (p > 0 && cert.b1 > 0.0) {
      const double r = std::sqrt(h / cert.b1);
      Vec zt(p);
      for (int i = 0; i < p; ++i) zt[i] = uniform_in(-r, r, rng);
      z = zeq_pi(sys, ctrl, x) + zt;
      if (!dom.z.contains(z)) continue;
    } else {
      z = uniform_in(dom.z, rng);
    }
    if (in_Cv(bar, cert, sys, ctrl, x, z)) {
      out.emplace_back(std::move(x), std::move(z));
      if (static_cast<int>(out.size()) == n_samples) break;
    }
  }
  return out;
}

}  // namespace spsafe
