#pragma once

#include "spsafe/composite.hpp"
#include "spsafe/systems.hpp"

#include <cstddef>
#include <optional>

namespace spsafe {

struct IntegrateConfig {
  double eps = 0.01;
  double dt = 1e-3;
  double t_f = 10.0;
  int record_stride = 10;  // samples kept every this many steps
  std::size_t max_steps = 0;  // 0 means unlimited; otherwise truncates t_f
  std::optional<Vec> x0;
  std::optional<Vec> z0;
};

/// Recorded run. Barrier and composite values are sampled on the recording
/// grid; the running minima refer to those samples.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> z;
  std::vector<Vec> u;
  std::vector<double> h;
  std::vector<double> v;
  double min_h = 0.0;
  double min_v = 0.0;
  bool has_v = false;
  std::optional<double> violation_time;
  std::size_t infeasible_steps = 0;
  bool diverged = false;
  double t_end = 0.0;

  // integrator echo
  double eps = 0.0;
  double dt = 0.0;
  double dt_eff = 0.0;
  double t_f_requested = 0.0;
  int record_stride = 0;
  std::size_t steps = 0;
};

/// Fixed-step RK4 on the stacked state with the policy evaluated at every
/// stage. The step is clamped to eps/50 so the fast subsystem stays
/// resolved; a NaN/Inf state stops the run and returns the partial record
/// flagged as diverged.
Trajectory integrate(const SystemBundle& bundle, const IntegrateConfig& cfg);

/// First zero down-crossing of the sampled barrier, located by linear
/// interpolation between the bracketing samples.
std::optional<double> detect_violation(const std::vector<double>& t,
                                       const std::vector<double>& h,
                                       double threshold = 0.0);

struct SweepRun {
  double eps = 0.0;
  double min_h = 0.0;
  double min_v = 0.0;
  bool has_v = false;
  std::optional<double> violation_time;
  bool diverged = false;
  std::size_t infeasible_steps = 0;
  double runtime_s = 0.0;
};

struct SweepReport {
  std::vector<double> eps_values;
  std::vector<SweepRun> runs;
  std::optional<double> empirical_threshold;  // largest tested eps still safe
  std::optional<double> eps_bar_theoretical;  // attached by callers that hold one
  bool monotone = true;  // safe prefix followed by unsafe suffix
};

/// on_run, when set, receives each finished trajectory with its sweep index.
/// Calls come from worker threads with distinct indices; the callback must
/// not touch shared state without its own locking.
SweepReport sweep(const SystemBundle& bundle, double eps_min, double eps_max,
                  int count, const IntegrateConfig& base,
                  const std::function<void(std::size_t, const Trajectory&)>&
                      on_run = nullptr);

struct TheoremCheckConfig {
  int n_ic = 50;
  int n_eps = 20;
  std::uint64_t seed = 1;
  double v_tol = 1e-6;
  double dt = 1e-3;
  double t_f = 10.0;
  int record_stride = 10;
  std::size_t step_budget = 400000;  // per-run cap; truncates the horizon
  std::size_t ic_attempts = 2000000;
  std::optional<double> force_eps;
};

struct CheckRun {
  double eps = 0.0;
  Vec x0;
  Vec z0;
  double min_v = 0.0;
  double t_end = 0.0;
  bool diverged = false;
  std::optional<double> violation_time;  // first composite-value crossing below -v_tol
};

struct TheoremCheckReport {
  double eps_bar = 0.0;
  bool out_of_certificate = false;  // a forced eps exceeded the bound
  int n_ic_requested = 0;
  int n_ic_used = 0;
  std::vector<double> eps_draws;
  std::vector<CheckRun> runs;
  std::vector<CheckRun> counterexamples;
  bool pass = false;
  bool vacuous = false;  // no initial conditions could be sampled
};

/// Monte Carlo forward-invariance check: initial conditions sampled in the
/// composite safe set, timescale ratios drawn below the certified bound,
/// every run must keep V above -v_tol. Runs execute concurrently but the
/// report is assembled in index order, so results are deterministic for a
/// fixed seed.
TheoremCheckReport theorem_check(const SystemBundle& bundle,
                                 const EpsilonCertificate& cert,
                                 const TheoremCheckConfig& cfg);

/// Worker count: SPSAFE_THREADS when set, hardware concurrency otherwise.
int thread_count();

/// Index-parallel loop with deterministic per-index output slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spsafe
