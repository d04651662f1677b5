#include "spsafe/composite.hpp"
#include "spsafe/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"

using namespace spsafe;

namespace {

Vec v1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// U(z) = |z|^2 with loose quadratic envelopes, used where a certificate with
// round constants keeps the arithmetic transparent.
LyapunovCertificate unit_quadratic() {
  LyapunovCertificate c;
  c.U = [](const Vec& zt) { return zt.squaredNorm(); };
  c.grad_U = [](const Vec& zt) -> Vec { return 2.0 * zt; };
  c.b1 = 1.0;
  c.b2 = 1.0;
  c.b3 = 2.0;
  c.b4 = 2.0;
  return c;
}

ConstantSet handcrafted(double l_f, double l_h, double l_rs, double l_zeq_pi,
                        double l_alpha) {
  ConstantSet cs;
  cs.l_f = l_f;
  cs.l_h = l_h;
  cs.l_rs = l_rs;
  cs.l_zeq_pi = l_zeq_pi;
  cs.l_alpha = l_alpha;
  cs.l_g = 1.0;
  cs.l_pi = 1.0;
  return cs;
}

LyapunovCertificate bare_cert(double b1, double b2, double b3, double b4) {
  LyapunovCertificate c = unit_quadratic();
  c.b1 = b1;
  c.b2 = b2;
  c.b3 = b3;
  c.b4 = b4;
  return c;
}

}  // namespace

TEST_CASE("closed-loop equilibrium branch") {
  SystemBundle toy = toy_system();
  CHECK(zeq_pi(toy.sys, toy.ctrl, v1(0.0))[0] == doctest::Approx(0.0));

  SystemBundle arm = arm_system();
  Controller fixed = plain_controller(
      [](const Vec&) {
        Vec u(2);
        u << 1.0, 1.0;
        return u;
      },
      0.0, 2);
  Vec x(4);
  x << 0.3, -0.1, 1.0, 0.0;
  Vec branch = zeq_pi(arm.sys, fixed, x);
  CHECK(branch[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(branch[1] == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("composite barrier equals h on the equilibrium branch") {
  std::mt19937_64 rng(17);
  for (const char* name : {"toy", "arm", "primal_dual"}) {
    SystemBundle b = make_system(name);
    LyapunovCertificate cert =
        b.cert ? *b.cert : unit_quadratic();
    for (int k = 0; k < 20; ++k) {
      Vec x = uniform_in(b.domain.x, rng);
      Vec z = zeq_pi(b.sys, b.ctrl, x);
      double v = composite_cbf(b.barrier, cert, b.sys, b.ctrl, x, z);
      CHECK(v == doctest::Approx(b.barrier.h(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("composite barrier subtracts the fast error energy") {
  SystemBundle toy = toy_system();
  LyapunovCertificate cert = unit_quadratic();
  Vec x = v1(0.0);
  Vec z = v1(zeq_pi(toy.sys, toy.ctrl, x)[0] + 0.5);
  double v = composite_cbf(toy.barrier, cert, toy.sys, toy.ctrl, x, z);
  CHECK(v == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("composite safe set membership and the boundary") {
  SystemBundle toy = toy_system();
  LyapunovCertificate cert = unit_quadratic();
  // h(0) = 1 and U(z_tilde) = 1 exactly on the boundary: still inside
  Vec zb = v1(zeq_pi(toy.sys, toy.ctrl, v1(0.0))[0] + 1.0);
  CHECK(in_Cv(toy.barrier, cert, toy.sys, toy.ctrl, v1(0.0), zb));
  // h = 0.1 but U = 0.2: outside
  double xs = std::sqrt(0.9);
  Vec zo = v1(zeq_pi(toy.sys, toy.ctrl, v1(xs))[0] + std::sqrt(0.2));
  CHECK(!in_Cv(toy.barrier, cert, toy.sys, toy.ctrl, v1(xs), zo));
  // a tolerance admits slightly negative composite values
  Vec zt = v1(zeq_pi(toy.sys, toy.ctrl, v1(xs))[0] + std::sqrt(0.2));
  CHECK(in_Cv(toy.barrier, cert, toy.sys, toy.ctrl, v1(xs), zt, 0.2));
}

TEST_CASE("membership in the composite set implies membership in the safe set") {
  SystemBundle toy = toy_system();
  REQUIRE(toy.cert.has_value());
  std::mt19937_64 rng(23);
  int inside = 0;
  for (int k = 0; k < 10000; ++k) {
    Vec x = uniform_in(toy.domain.x, rng);
    Vec z = uniform_in(toy.domain.z, rng);
    double v = composite_cbf(toy.barrier, *toy.cert, toy.sys, toy.ctrl, x, z);
    if (v >= 0.0) {
      ++inside;
      CHECK(toy.barrier.h(x) >= 0.0);
    }
  }
  CHECK(inside > 100);  // the sample actually exercises the implication
}

TEST_CASE("quadratic certificate from scalar boundary layer") {
  Mat a(1, 1);
  a << -1.0;
  LyapunovCertificate c = quadratic_certificate(a);
  CHECK(c.b1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.b2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.b3 == 1.0);
  CHECK(c.b4 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.U(v1(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.grad_U(v1(2.0))[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quadratic certificate from diagonal boundary layer") {
  LyapunovCertificate c = quadratic_certificate(-0.6 * Mat::Identity(2, 2));
  CHECK(c.b1 == doctest::Approx(1.0 / 1.2).epsilon(1e-12));
  CHECK(c.b2 == doctest::Approx(1.0 / 1.2).epsilon(1e-12));
  CHECK(c.b4 == doctest::Approx(2.0 / 1.2).epsilon(1e-12));

  LyapunovCertificate c3 = quadratic_certificate(-Mat::Identity(3, 3));
  CHECK((c3.P - 0.5 * Mat::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("quadratic certificate rejects non-contracting layers") {
  Mat pos(1, 1);
  pos << 1.0;
  CHECK_THROWS_AS(quadratic_certificate(pos), CertificateError);
  Mat marginal(2, 2);
  marginal << 0.0, 1.0, -1.0, 0.0;
  CHECK_THROWS_AS(quadratic_certificate(marginal), CertificateError);
  Mat rect(1, 2);
  rect << -1.0, 0.0;
  CHECK_THROWS_AS(quadratic_certificate(rect), ContractViolation);
}

TEST_CASE("quadratic certificate envelopes hold with slack 1e-9") {
  Mat a(2, 2);
  a << -1.0, 0.3, -0.2, -2.0;
  LyapunovCertificate c = quadratic_certificate(a);
  std::mt19937_64 rng(41);
  for (int k = 0; k < 10000; ++k) {
    Vec zt = oracles::random_vec(2, -10.0, 10.0, rng);
    double n2 = zt.squaredNorm();
    double u = c.U(zt);
    CHECK(u >= c.b1 * n2 - 1e-9 * (1.0 + n2));
    CHECK(u <= c.b2 * n2 + 1e-9 * (1.0 + n2));
    double decay = c.grad_U(zt).dot(a * zt);
    CHECK(decay <= -c.b3 * n2 + 1e-9 * (1.0 + n2));
    CHECK(c.grad_U(zt).norm() <= c.b4 * zt.norm() + 1e-9 * (1.0 + zt.norm()));
  }
}

TEST_CASE("certificate gradient matches finite differences") {
  Mat a(2, 2);
  a << -1.0, 0.3, -0.2, -2.0;
  LyapunovCertificate c = quadratic_certificate(a);
  std::mt19937_64 rng(43);
  for (int k = 0; k < 100; ++k) {
    Vec zt = oracles::random_vec(2, -3.0, 3.0, rng);
    Vec fd = oracles::fd_grad([&](const Vec& p) { return c.U(p); }, zt);
    CHECK((c.grad_U(zt) - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
  }
}

TEST_CASE("constant estimation on the toy model recovers known bounds") {
  SystemBundle toy = toy_system();
  ConstantSet cs = estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                      toy.domain, 101, 1.1);
  // max |dh/dx| = 2 on [-1,1], hit exactly at the grid ends
  CHECK(cs.l_h == doctest::Approx(2.2).epsilon(1e-12));
  // f = z - x has constant Jacobian [-1 1 0]
  CHECK(cs.l_f == doctest::Approx(1.1 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(cs.l_g == doctest::Approx(1.1 * std::sqrt(3.0)).epsilon(1e-6));
  CHECK(cs.l_alpha == 1.0);  // never inflated
  CHECK(cs.l_zeq_pi > 0.0);
  CHECK(cs.l_pi <= toy.ctrl.lipschitz * 1.1 + 1e-6);
}

TEST_CASE("constant estimation flags an empty safe set") {
  SystemBundle toy = toy_system();
  Barrier hopeless{[](const Vec&) { return -1.0; },
                   [](const Vec&) { return Vec::Zero(1); }, ClassK{1.0}, 0.0};
  CHECK_THROWS_AS(estimate_constants(toy.sys, toy.ctrl, hopeless, toy.domain,
                                     11, 1.1),
                  EstimationError);
  CHECK_THROWS_AS(estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                     toy.domain, 1, 1.1),
                  DomainError);
  CHECK_THROWS_AS(estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                     toy.domain, 11, 0.9),
                  DomainError);
}

TEST_CASE("constant estimation of constant dynamics") {
  SlowFastSystem sys;
  sys.n_slow = 1;
  sys.n_fast = 0;
  sys.n_input = 1;
  sys.f = [](const Vec& x, const Vec&, const Vec&) { return Vec::Constant(1, 1.5); };
  sys.g = [](const Vec& z, const Vec&, const Vec&) { return Vec(0); };
  sys.z_eq = [](const Vec&, const Vec&) { return Vec(0); };
  sys.grad_z_eq = [](const Vec&, const Vec&) { return Mat(0, 2); };
  Controller zero = plain_controller([](const Vec&) { return Vec::Zero(1); },
                                     0.0, 1);
  Barrier bar{[](const Vec& x) { return 1.0 - x[0] * x[0]; },
              [](const Vec& x) { return v1(-2.0 * x[0]); }, ClassK{1.0}, 0.0};
  Domain dom{Box{v1(-1.0), v1(1.0)}, Box{Vec(0), Vec(0)}, Box{v1(-1.0), v1(1.0)}};
  ConstantSet cs = estimate_constants(sys, zero, bar, dom, 21, 1.0);
  CHECK(cs.l_f <= 1e-9);
  CHECK(cs.l_rs == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(cs.l_zeq_pi == 0.0);
  CHECK(cs.l_g == 0.0);
}

TEST_CASE("grid refinement never shrinks the estimated suprema") {
  SystemBundle toy = toy_system();
  ConstantSet coarse = estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                          toy.domain, 51, 1.0);
  ConstantSet fine = estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                        toy.domain, 101, 1.0);
  CHECK(coarse.l_f <= fine.l_f + 1e-12);
  CHECK(coarse.l_g <= fine.l_g + 1e-12);
  CHECK(coarse.l_h <= fine.l_h + 1e-12);
  CHECK(coarse.l_rs <= fine.l_rs + 1e-12);
  CHECK(coarse.l_zeq_pi <= fine.l_zeq_pi + 1e-12);
  CHECK(coarse.l_pi <= fine.l_pi + 1e-12);
}

TEST_CASE("coupling constants recompute from the stored bounds") {
  ConstantSet cs = handcrafted(2.0, 3.0, 0.5, 1.5, 1.0);
  CHECK(cs.k1(2.0) == doctest::Approx(3.0 * 2.0 + 2.0 * 1.5 * 0.5));
  CHECK(cs.k2(2.0) == doctest::Approx(2.0 * 1.5 * 2.0));
}

TEST_CASE("toy certified bound regression value") {
  // frozen from the first verified end-to-end run; guards the whole
  // estimate -> certificate -> bound pipeline against silent drift
  SystemBundle toy = toy_system();
  ConstantSet cs = estimate_constants(toy.sys, toy.ctrl, toy.barrier,
                                      toy.domain, 101, 1.1);
  EpsilonCertificate cert = epsilon_bar(cs, *toy.cert, toy.barrier.eta, 0.5);
  CHECK(cert.valid);
  CHECK(cert.eps_bar ==
        doctest::Approx(0.004673685742296344).epsilon(1e-9));
  CHECK(cert.eps1 == doctest::Approx(0.09739762826630056).epsilon(1e-9));
  CHECK(cert.eps2 == cert.eps_bar);
}

TEST_CASE("timescale bound chain on round numbers") {
  // K1 = 2, K2 = 1: eps1 = 0.5, eps2 = 1/6, third ratio = 0.5
  ConstantSet cs = handcrafted(1.0, 0.0, 2.0, 1.0, 1.0);
  LyapunovCertificate cert = bare_cert(1.0, 1.0, 1.0, 1.0);
  EpsilonCertificate ec = epsilon_bar(cs, cert, 0.5, 0.5);
  CHECK(ec.k1 == 2.0);
  CHECK(ec.k2 == 1.0);
  CHECK(ec.eps1 == 0.5);
  CHECK(ec.eps2 == 1.0 / 6.0);
  CHECK(ec.eps_bar == 1.0 / 6.0);
  CHECK(ec.valid);
}

TEST_CASE("timescale bound chain with a vanishing coupling term") {
  // l_h = l_rs = 0 makes K1 = 0; the eta ratio then collapses to eps1
  ConstantSet cs = handcrafted(2.0, 0.0, 0.0, 1.0, 1.0);
  LyapunovCertificate cert = bare_cert(1.0, 1.0, 1.0, 1.0);
  EpsilonCertificate ec = epsilon_bar(cs, cert, 0.25, 0.5);
  CHECK(ec.k1 == 0.0);
  CHECK(ec.k2 == 2.0);
  CHECK(ec.eps1 == 0.25);
  CHECK(ec.eps2 == 0.25);
  CHECK(ec.eps_bar == 0.25);  // third ratio is 0.5, not binding
  CHECK(ec.valid);
}

TEST_CASE("timescale bound treats zero denominators as unbounded") {
  // K2 = 0: eps1 drops out entirely
  ConstantSet cs = handcrafted(0.0, 1.0, 1.0, 1.0, 2.0);
  LyapunovCertificate cert = bare_cert(1.0, 2.0, 1.0, 1.0);
  EpsilonCertificate ec = epsilon_bar(cs, cert, 0.5, 0.5);
  CHECK(std::isinf(ec.eps1));
  CHECK(ec.k1 == 1.0);
  CHECK(ec.eps2 == doctest::Approx(4.0 * 0.5 * 0.5 / 1.0));
  CHECK(ec.eps_bar == doctest::Approx(0.125));  // (1-nu) b3 / (l_alpha b2)
  CHECK(ec.valid);

  // everything zero: the bound is vacuous and flagged invalid
  ConstantSet zero = handcrafted(0.0, 0.0, 0.0, 0.0, 0.0);
  EpsilonCertificate vac = epsilon_bar(zero, cert, 0.5, 0.5);
  CHECK(std::isinf(vac.eps_bar));
  CHECK(!vac.valid);
}

TEST_CASE("timescale bound rejects bad parameters") {
  ConstantSet cs = handcrafted(1.0, 1.0, 1.0, 1.0, 1.0);
  LyapunovCertificate cert = bare_cert(1.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(epsilon_bar(cs, cert, 0.1, 0.0), DomainError);
  CHECK_THROWS_AS(epsilon_bar(cs, cert, 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(epsilon_bar(cs, cert, 0.1, 1.5), DomainError);
  CHECK_THROWS_AS(epsilon_bar(cs, cert, -0.1, 0.5), DomainError);
}

TEST_CASE("timescale bound ordering and eta monotonicity") {
  std::mt19937_64 rng(2718);
  for (int k = 0; k < 100; ++k) {
    ConstantSet cs = handcrafted(uniform_in(0.0, 3.0, rng),
                                 uniform_in(0.0, 3.0, rng),
                                 uniform_in(0.0, 3.0, rng),
                                 uniform_in(0.0, 3.0, rng),
                                 uniform_in(0.1, 3.0, rng));
    double b2 = uniform_in(0.5, 3.0, rng);
    LyapunovCertificate cert =
        bare_cert(0.5, b2, uniform_in(0.5, 2.0, rng), uniform_in(0.5, 3.0, rng));
    double eta = uniform_in(0.0, 1.0, rng);
    double nu = uniform_in(0.05, 0.95, rng);
    EpsilonCertificate lo = epsilon_bar(cs, cert, eta, nu);
    EpsilonCertificate hi = epsilon_bar(cs, cert, 2.0 * eta, nu);
    CHECK(lo.eps_bar <= lo.eps2);
    CHECK(lo.eps2 <= lo.eps1);
    CHECK(hi.eps_bar >= lo.eps_bar - 1e-15);
  }
}

TEST_CASE("initial condition sampling lands inside the composite set") {
  SystemBundle toy = toy_system();
  REQUIRE(toy.cert.has_value());
  auto ics = sample_ic_in_Cv(toy.sys, toy.ctrl, toy.barrier, *toy.cert,
                             toy.domain, 40, 7, 100000);
  CHECK(ics.size() == 40);
  for (const auto& [x0, z0] : ics) {
    CHECK(in_Cv(toy.barrier, *toy.cert, toy.sys, toy.ctrl, x0, z0));
    CHECK(toy.domain.x.contains(x0, 1e-12));
    CHECK(toy.domain.z.contains(z0, 1e-12));
  }

  auto again = sample_ic_in_Cv(toy.sys, toy.ctrl, toy.barrier, *toy.cert,
                               toy.domain, 40, 7, 100000);
  REQUIRE(again.size() == ics.size());
  for (std::size_t i = 0; i < ics.size(); ++i) {
    CHECK((again[i].first - ics[i].first).norm() == 0.0);
    CHECK((again[i].second - ics[i].second).norm() == 0.0);
  }

  Barrier hopeless{[](const Vec&) { return -1.0; },
                   [](const Vec&) { return Vec::Zero(1); }, ClassK{1.0}, 0.0};
  auto none = sample_ic_in_Cv(toy.sys, toy.ctrl, hopeless, *toy.cert,
                              toy.domain, 10, 7, 5000);
  CHECK(none.empty());
}
