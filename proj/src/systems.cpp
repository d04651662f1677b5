#include "spsafe/systems.hpp"

#include <cmath>
#include <memory>

namespace spsafe {

namespace {

Vec scalar_vec(double v) { return (Vec(1) << v).finished(); }

}  // namespace

// ---------------------------------------------------------------------------
// Toy interconnection.

SystemBundle toy_system(const ToyParams& p) {
  SystemBundle b;
  b.name = "toy";

  SlowFastSystem sys;
  sys.n_slow = 1;
  sys.n_fast = 1;
  sys.n_input = 1;
  sys.f = [](const Vec& x, const Vec& z, const Vec&) {
    return scalar_vec(z[0] - x[0]);
  };
  sys.g = [](const Vec& z, const Vec& x, const Vec& u) {
    return scalar_vec(u[0] + x[0] - z[0]);
  };
  sys.z_eq = [](const Vec& x, const Vec& u) { return scalar_vec(u[0] + x[0]); };
  sys.grad_z_eq = [](const Vec&, const Vec&) {
    return (Mat(1, 2) << 1.0, 1.0).finished();
  };
  b.sys = sys;

  Barrier bar;
  bar.h = [p](const Vec& x) { return p.beta * p.beta - x[0] * x[0]; };
  bar.grad_h = [](const Vec& x) { return scalar_vec(-2.0 * x[0]); };
  bar.alpha = ClassK{p.gamma_alpha};
  bar.eta = p.eta;
  b.barrier = bar;

  ReducedAffine red;
  red.drift = [](const Vec&) { return Vec::Zero(1); };
  red.input = [](const Vec&) { return Mat::Identity(1, 1); };
  b.reduced = red;

  Controller ctrl;
  ctrl.n_input = 1;
  ctrl.lipschitz = 3.0;
  ctrl.policy = [bar, red](const Vec& x) {
    const Vec u_des = scalar_vec(2.0 * std::sin(x[0]));
    return safe_filter_hard(constraint_coeffs(bar, red, x), u_des);
  };
  b.ctrl = ctrl;

  b.cert = quadratic_certificate(-Mat::Identity(1, 1));

  b.domain.x = Box{scalar_vec(-p.beta), scalar_vec(p.beta)};
  b.domain.z = Box{scalar_vec(-4.0), scalar_vec(4.0)};
  b.domain.u = Box{scalar_vec(-3.0), scalar_vec(3.0)};

  b.x0 = scalar_vec(p.x0);
  b.z0 = zeq_pi(b.sys, b.ctrl, b.x0) + scalar_vec(p.z0_offset);
  b.default_eps_min = 0.001;
  b.default_eps_max = 2.0;
  b.default_eps_count = 10;
  return b;
}

SystemBundle toy_reduced_system(const ToyParams& p) {
  SystemBundle full = toy_system(p);
  SystemBundle b;
  b.name = "toy_reduced";
  b.sys.n_slow = 1;
  b.sys.n_fast = 0;
  b.sys.n_input = 1;
  b.sys.f = [](const Vec&, const Vec&, const Vec& u) { return scalar_vec(u[0]); };
  b.barrier = full.barrier;
  b.reduced = full.reduced;
  b.ctrl = full.ctrl;
  b.domain.x = full.domain.x;
  b.domain.z = Box::empty();
  b.domain.u = full.domain.u;
  b.x0 = full.x0;
  b.z0 = Vec(0);
  return b;
}

// ---------------------------------------------------------------------------
// Two-link arm with motor dynamics.

Mat arm_mass_matrix(const ArmParams& p, const Vec& q) {
  const double lc = 0.5 * p.l;
  const double c2 = std::cos(q[1]);
  Mat m(2, 2);
  m(0, 0) = 2.0 * p.j + p.m * lc * lc + p.m * (p.l * p.l + lc * lc) +
            2.0 * p.m * p.l * lc * c2;
  m(0, 1) = p.j + p.m * (lc * lc + p.l * lc * c2);
  m(1, 0) = m(0, 1);
  m(1, 1) = p.j + p.m * lc * lc;
  return m;
}

Mat arm_coriolis(const ArmParams& p, const Vec& q, const Vec& omega) {
  const double hc = p.m * p.l * 0.5 * p.l;
  const double s2 = std::sin(q[1]);
  Mat c(2, 2);
  c(0, 0) = -hc * s2 * omega[1];
  c(0, 1) = -hc * s2 * (omega[0] + omega[1]);
  c(1, 0) = hc * s2 * omega[0];
  c(1, 1) = 0.0;
  return c;
}

Vec arm_gravity(const ArmParams& p, const Vec& q) {
  const double lc = 0.5 * p.l;
  const double a1 = p.m * p.g0 * (lc + p.l);
  const double a2 = p.m * p.g0 * lc;
  const double s1 = std::sin(q[0]);
  const double s12 = std::sin(q[0] + q[1]);
  return (Vec(2) << a1 * s1 + a2 * s12, a2 * s12).finished();
}

Vec arm_fk(const ArmParams& p, const Vec& q) {
  const double s1 = std::sin(q[0]), s12 = std::sin(q[0] + q[1]);
  const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
  return (Vec(2) << p.l * (s1 + s12), -p.l * (c1 + c12)).finished();
}

namespace {

Mat arm_fk_jacobian(const ArmParams& p, const Vec& q) {
  const double s1 = std::sin(q[0]), s12 = std::sin(q[0] + q[1]);
  const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
  Mat j(2, 2);
  j(0, 0) = p.l * (c1 + c12);
  j(0, 1) = p.l * c12;
  j(1, 0) = p.l * (s1 + s12);
  j(1, 1) = p.l * s12;
  return j;
}

}  // namespace

std::vector<PositionMargin> arm_position_margins(const ArmParams& p) {
  std::vector<PositionMargin> out;
  const Mat zero = Mat::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    PositionMargin lo;
    lo.value = [p, i](const Vec& q) { return q[i] - p.q_min[i]; };
    lo.grad = [i](const Vec&) { return Vec::Unit(2, i); };
    lo.hess = [zero](const Vec&) { return zero; };
    out.push_back(lo);
    PositionMargin hi;
    hi.value = [p, i](const Vec& q) { return p.q_max[i] - q[i]; };
    hi.grad = [i](const Vec&) -> Vec { return -Vec::Unit(2, i); };
    hi.hess = [zero](const Vec&) { return zero; };
    out.push_back(hi);
  }
  for (int k = 0; k < p.obstacles.rows(); ++k) {
    const Vec c = p.obstacles.row(k).transpose();
    PositionMargin ob;
    ob.value = [p, c](const Vec& q) {
      const Vec d = arm_fk(p, q) - c;
      return d.squaredNorm() - p.obstacle_radius * p.obstacle_radius;
    };
    ob.grad = [p, c](const Vec& q) -> Vec {
      return 2.0 * arm_fk_jacobian(p, q).transpose() * (arm_fk(p, q) - c);
    };
    ob.hess = [p, c](const Vec& q) {
      const double s1 = std::sin(q[0]), s12 = std::sin(q[0] + q[1]);
      const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
      Mat d2px(2, 2), d2py(2, 2);
      d2px << -s1 - s12, -s12, -s12, -s12;
      d2py << c1 + c12, c12, c12, c12;
      d2px *= p.l;
      d2py *= p.l;
      const Vec d = arm_fk(p, q) - c;
      const Mat j = arm_fk_jacobian(p, q);
      return Mat(2.0 * (j.transpose() * j + d[0] * d2px + d[1] * d2py));
    };
    out.push_back(ob);
  }
  return out;
}

std::vector<double> arm_lifted_margins(const ArmParams& p, const Vec& q,
                                       const Vec& omega) {
  std::vector<double> vals;
  for (const PositionMargin& m : arm_position_margins(p))
    vals.push_back(hocbf_lift(m, p.gamma, q, omega).first);
  return vals;
}

Barrier arm_barrier(const ArmParams& p) {
  auto margins = std::make_shared<std::vector<PositionMargin>>(
      arm_position_margins(p));
  Barrier bar;
  bar.alpha = ClassK{p.gamma};
  bar.eta = p.eta;
  bar.h = [p, margins](const Vec& x) {
    const Vec q = x.head(2), w = x.tail(2);
    std::vector<double> vals;
    vals.reserve(margins->size());
    for (const PositionMargin& m : *margins)
      vals.push_back(hocbf_lift(m, p.gamma, q, w).first);
    return lse_aggregate(vals, p.rho);
  };
  bar.grad_h = [p, margins](const Vec& x) {
    const Vec q = x.head(2), w = x.tail(2);
    std::vector<double> vals;
    std::vector<Vec> grads;
    vals.reserve(margins->size());
    grads.reserve(margins->size());
    for (const PositionMargin& m : *margins) {
      auto [v, g] = hocbf_lift(m, p.gamma, q, w);
      vals.push_back(v);
      grads.push_back(std::move(g));
    }
    return lse_gradient(vals, grads, p.rho);
  };
  return bar;
}

Controller arm_nominal_controller(const ArmParams& p) {
  Controller c;
  c.n_input = 2;
  c.lipschitz = 80.0;
  c.policy = [p](const Vec& x) {
    const Vec q = x.head(2), w = x.tail(2);
    const Vec tau = p.kp * (p.q_target - q) - p.kd * w + arm_gravity(p, q);
    return ControlSample{(p.r_motor / p.k_i) * tau, false};
  };
  return c;
}

SystemBundle arm_system(const ArmParams& p) {
  SystemBundle b;
  b.name = "arm";

  const double bf = p.b + p.k_i * p.k_w / p.r_motor;

  SlowFastSystem sys;
  sys.n_slow = 4;
  sys.n_fast = 2;
  sys.n_input = 2;
  sys.f = [p](const Vec& x, const Vec& z, const Vec&) {
    const Vec q = x.head(2), w = x.tail(2);
    const Vec qdd = arm_mass_matrix(p, q).inverse() *
                    (p.k_i * z - p.b * w - arm_coriolis(p, q, w) * w -
                     arm_gravity(p, q));
    Vec dx(4);
    dx << w, qdd;
    return dx;
  };
  sys.g = [p](const Vec& z, const Vec& x, const Vec& u) -> Vec {
    const Vec w = x.tail(2);
    return (u - p.r_motor * z - p.k_w * w) / p.l_tilde;
  };
  sys.z_eq = [p](const Vec& x, const Vec& u) -> Vec {
    return (u - p.k_w * x.tail(2)) / p.r_motor;
  };
  sys.grad_z_eq = [p](const Vec&, const Vec&) {
    Mat j = Mat::Zero(2, 6);
    j.block(0, 2, 2, 2) = -(p.k_w / p.r_motor) * Mat::Identity(2, 2);
    j.block(0, 4, 2, 2) = (1.0 / p.r_motor) * Mat::Identity(2, 2);
    return j;
  };
  b.sys = sys;

  b.barrier = arm_barrier(p);

  ReducedAffine red;
  red.drift = [p, bf](const Vec& x) {
    const Vec q = x.head(2), w = x.tail(2);
    const Vec qdd = arm_mass_matrix(p, q).inverse() *
                    (-bf * w - arm_coriolis(p, q, w) * w - arm_gravity(p, q));
    Vec d(4);
    d << w, qdd;
    return d;
  };
  red.input = [p](const Vec& x) {
    Mat bin = Mat::Zero(4, 2);
    bin.block(2, 0, 2, 2) =
        arm_mass_matrix(p, x.head(2)).inverse() * (p.k_i / p.r_motor);
    return bin;
  };
  b.reduced = red;

  const Controller nominal = arm_nominal_controller(p);
  Controller ctrl;
  ctrl.n_input = 2;
  ctrl.lipschitz = 2000.0;
  ctrl.policy = [bar = b.barrier, red, nominal, p](const Vec& x) {
    return safe_filter_smooth(constraint_coeffs(bar, red, x), nominal(x),
                              p.sigma);
  };
  b.ctrl = ctrl;

  b.cert = quadratic_certificate(-(p.r_motor / p.l_tilde) * Mat::Identity(2, 2));

  b.domain.x = Box{(Vec(4) << p.q_min, -p.omega_box, -p.omega_box).finished(),
                   (Vec(4) << p.q_max, p.omega_box, p.omega_box).finished()};
  b.domain.z = Box{Vec::Constant(2, -p.current_box), Vec::Constant(2, p.current_box)};
  b.domain.u = Box{Vec::Constant(2, -p.voltage_box), Vec::Constant(2, p.voltage_box)};

  b.x0 = (Vec(4) << p.q0, p.omega0).finished();
  b.z0 = zeq_pi(b.sys, b.ctrl, b.x0);
  b.default_eps_min = 0.001;
  b.default_eps_max = 0.035;
  b.default_eps_count = 10;
  return b;
}

// ---------------------------------------------------------------------------
// Primal-dual fast filter on a scalar integrator.

Vec primal_dual_kkt(const PrimalDualParams& p, double x) {
  const double u_star = std::max(p.pi_des, p.eta - p.gamma_alpha * x);
  const double lam_star = 2.0 * (u_star - p.pi_des);
  return (Vec(2) << u_star, lam_star).finished();
}

double qp_oracle(const PrimalDualParams& p, double x) {
  return std::max(p.pi_des, p.eta - p.gamma_alpha * x);
}

SystemBundle primal_dual_system(const PrimalDualParams& p) {
  SystemBundle b;
  b.name = "primal_dual";

  SlowFastSystem sys;
  sys.n_slow = 1;
  sys.n_fast = 2;
  sys.n_input = 0;
  sys.f = [](const Vec&, const Vec& z, const Vec&) { return scalar_vec(z[0]); };
  sys.g = [p](const Vec& z, const Vec& x, const Vec&) {
    const double c = z[0] + p.gamma_alpha * x[0] - p.eta;
    const double udot = -2.0 * (z[0] - p.pi_des) + z[1];
    const double ldot = (z[1] > 0.0 || -c > 0.0) ? -c : 0.0;
    return (Vec(2) << udot, ldot).finished();
  };
  sys.z_eq = [p](const Vec& x, const Vec&) { return primal_dual_kkt(p, x[0]); };
  sys.grad_z_eq = [p](const Vec& x, const Vec&) {
    Mat j = Mat::Zero(2, 1);
    if (p.eta - p.gamma_alpha * x[0] > p.pi_des) {
      j(0, 0) = -p.gamma_alpha;
      j(1, 0) = -2.0 * p.gamma_alpha;
    }
    return j;
  };
  b.sys = sys;

  Barrier bar;
  bar.h = [](const Vec& x) { return x[0]; };
  bar.grad_h = [](const Vec&) { return scalar_vec(1.0); };
  bar.alpha = ClassK{p.gamma_alpha};
  bar.eta = p.eta;
  b.barrier = bar;

  b.reduced.drift = [](const Vec&) { return Vec::Zero(1); };
  b.reduced.input = [](const Vec&) { return Mat::Identity(1, 1); };

  Controller ctrl;
  ctrl.n_input = 0;
  ctrl.lipschitz = 0.0;
  ctrl.policy = [](const Vec&) { return ControlSample{Vec(0), false}; };
  b.ctrl = ctrl;

  b.domain.x = Box{scalar_vec(0.0), scalar_vec(4.5)};
  b.domain.z = Box{(Vec(2) << -4.0, 0.0).finished(),
                   (Vec(2) << 1.0, 8.0).finished()};
  b.domain.u = Box::empty();

  b.x0 = scalar_vec(p.x0);
  b.z0 = (Vec(2) << p.u0, p.lambda0).finished();
  b.default_eps_min = 0.01;
  b.default_eps_max = 0.3;
  b.default_eps_count = 20;
  return b;
}

SystemBundle qp_reference_system(const PrimalDualParams& p) {
  SystemBundle pd = primal_dual_system(p);
  SystemBundle b;
  b.name = "qp_reference";
  b.sys.n_slow = 1;
  b.sys.n_fast = 0;
  b.sys.n_input = 1;
  b.sys.f = [](const Vec&, const Vec&, const Vec& u) { return scalar_vec(u[0]); };
  b.barrier = pd.barrier;
  b.reduced = pd.reduced;
  Controller ctrl;
  ctrl.n_input = 1;
  ctrl.lipschitz = p.gamma_alpha;
  ctrl.policy = [p](const Vec& x) {
    return ControlSample{scalar_vec(qp_oracle(p, x[0])), false};
  };
  b.ctrl = ctrl;
  b.domain.x = pd.domain.x;
  b.domain.z = Box::empty();
  b.domain.u = Box{scalar_vec(-4.0), scalar_vec(1.0)};
  b.x0 = pd.x0;
  b.z0 = Vec(0);
  return b;
}

SystemBundle make_system(const std::string& name) {
  if (name == "toy") return toy_system();
  if (name == "arm") return arm_system();
  if (name == "primal_dual") return primal_dual_system();
  throw DomainError("unknown system: " + name);
}

}  // namespace spsafe
