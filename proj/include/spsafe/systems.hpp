#pragma once

#include "spsafe/cbf.hpp"
#include "spsafe/composite.hpp"
#include "spsafe/core.hpp"

#include <optional>
#include <string>

namespace spsafe {

/// Everything a simulation or certificate run needs for one model.
struct SystemBundle {
  std::string name;
  SlowFastSystem sys;
  Controller ctrl;
  Barrier barrier;
  ReducedAffine reduced;
  std::optional<LyapunovCertificate> cert;
  Domain domain;
  Vec x0;
  Vec z0;
  double default_eps_min = 0.001;
  double default_eps_max = 2.0;
  int default_eps_count = 10;
};

// ---------------------------------------------------------------------------
// Scalar toy interconnection: xdot = z - x, eps*zdot = u + x - z,
// h = beta^2 - x^2, nominal input 2*sin(x) behind the hard filter.

struct ToyParams {
  double beta = 1.0;
  double gamma_alpha = 1.0;
  double eta = 0.1;
  double x0 = 0.5;
  double z0_offset = 0.8;  // initial fast error off the equilibrium branch
};

SystemBundle toy_system(const ToyParams& p = {});

/// Closed reduced loop of the toy model (no fast state), for oracle runs.
SystemBundle toy_reduced_system(const ToyParams& p = {});

// ---------------------------------------------------------------------------
// Two-link arm in the vertical plane, driven through first-order motor
// dynamics. Angles are measured from the downward vertical; the slow state
// is (q, omega), the fast state the motor currents.

struct ArmParams {
  double m = 0.5;      // link mass
  double l = 1.0;      // link length
  double j = 0.167;    // centroidal link inertia
  double b = 0.5;      // joint friction
  double r_motor = 0.6;
  double l_tilde = 1.0;  // unscaled inductance
  double k_i = 0.4;      // torque constant
  double k_w = 0.4;      // back-EMF constant
  double g0 = 9.81;
  double gamma = 10.0;  // velocity-lift gain, also the barrier rate
  double eta = 0.1;
  double rho = 50.0;  // soft-min sharpness
  double sigma = 50.0;  // smooth-filter sharpness
  double kp = 20.0;
  double kd = 10.0;
  Vec q_min = (Vec(2) << 0.0, -80.0 * M_PI / 180.0).finished();
  Vec q_max = (Vec(2) << 185.0 * M_PI / 180.0, 80.0 * M_PI / 180.0).finished();
  Vec q_target = (Vec(2) << M_PI, 0.0).finished();
  Mat obstacles = (Mat(5, 2) << 1.1, -1.7, 2.2, 0.0, 1.9, 0.6, 1.3, 1.7, -0.4,
                   2.1).finished();
  double obstacle_radius = 0.3;
  Vec q0 = (Vec(2) << 0.0, 0.0).finished();
  Vec omega0 = Vec::Zero(2);
  double omega_box = 5.0;    // sampling range for joint rates
  double current_box = 200.0;
  double voltage_box = 150.0;
};

Mat arm_mass_matrix(const ArmParams& p, const Vec& q);
Mat arm_coriolis(const ArmParams& p, const Vec& q, const Vec& omega);
Vec arm_gravity(const ArmParams& p, const Vec& q);
Vec arm_fk(const ArmParams& p, const Vec& q);

/// The nine position margins: four joint limits, five obstacle clearances
/// (squared distance minus squared radius).
std::vector<PositionMargin> arm_position_margins(const ArmParams& p);

/// Velocity-lifted margin values at (q, omega), in the same order.
std::vector<double> arm_lifted_margins(const ArmParams& p, const Vec& q,
                                       const Vec& omega);

/// Soft minimum of the lifted margins, with gradient in (q, omega).
Barrier arm_barrier(const ArmParams& p);

/// PD tracking with gravity compensation, mapped to motor voltages.
Controller arm_nominal_controller(const ArmParams& p);

SystemBundle arm_system(const ArmParams& p = {});

// ---------------------------------------------------------------------------
// Scalar integrator whose input is produced by a primal-dual flow running as
// the fast block: z = (u, lambda) follows the KKT conditions of the filter QP
// min (u - pi_des)^2 s.t. u + alpha(h(x)) - eta >= 0 with h(x) = x.

struct PrimalDualParams {
  double pi_des = -3.0;
  double gamma_alpha = 2.0;
  double eta = 0.1;
  double x0 = 4.0;
  double u0 = -3.0;
  double lambda0 = 0.0;
};

SystemBundle primal_dual_system(const PrimalDualParams& p = {});

/// Exact QP solution the flow converges to: u*(x) and lambda*(x).
Vec primal_dual_kkt(const PrimalDualParams& p, double x);

/// Closed-form filtered input for the static reference loop.
double qp_oracle(const PrimalDualParams& p, double x);

/// Integrator driven by the exact QP solution (no fast state), the
/// reference the dynamic filter is compared against.
SystemBundle qp_reference_system(const PrimalDualParams& p = {});

SystemBundle make_system(const std::string& name);

}  // namespace spsafe
