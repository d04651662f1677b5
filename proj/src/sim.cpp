#include "spsafe/sim.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace spsafe {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace

Trajectory integrate(const SystemBundle& bundle, const IntegrateConfig& cfg) {
  const SlowFastSystem& sys = bundle.sys;
  const int p = sys.n_fast;
  if (p > 0 && !(cfg.eps > 0.0))
    throw DomainError("integrate: eps must be positive");
  if (!(cfg.dt > 0.0) || !(cfg.t_f > 0.0))
    throw DomainError("integrate: dt and t_f must be positive");
  if (cfg.record_stride < 1)
    throw DomainError("integrate: record stride must be >= 1");

  Vec x = cfg.x0.value_or(bundle.x0);
  Vec z = cfg.z0.value_or(bundle.z0);
  if (x.size() != sys.n_slow || z.size() != p)
    throw ContractViolation("integrate: initial condition size mismatch");

  // Fast-rate resolution guard: at least 50 steps per fast time constant.
  const double dt_eff = p > 0 ? std::min(cfg.dt, cfg.eps / 50.0) : cfg.dt;
  std::size_t n_steps = static_cast<std::size_t>(std::ceil(cfg.t_f / dt_eff - 1e-9));
  if (n_steps < 1) n_steps = 1;
  if (cfg.max_steps > 0 && n_steps > cfg.max_steps) n_steps = cfg.max_steps;

  Trajectory traj;
  traj.eps = cfg.eps;
  traj.dt = cfg.dt;
  traj.dt_eff = dt_eff;
  traj.t_f_requested = cfg.t_f;
  traj.record_stride = cfg.record_stride;
  traj.has_v = bundle.cert.has_value();
  traj.min_h = std::numeric_limits<double>::infinity();
  traj.min_v = traj.has_v ? std::numeric_limits<double>::infinity() : kNan;

  bool stage_infeasible = false;
  const auto rhs = [&](const Vec& xs, const Vec& zs, Vec& dx, Vec& dz) {
    ControlSample s = bundle.ctrl.policy(xs);
    if (s.infeasible) stage_infeasible = true;
    dx = sys.f(xs, zs, s.u);
    if (p > 0) dz = sys.g(zs, xs, s.u) / cfg.eps;
  };

  const auto record = [&](double t, const Vec& xs, const Vec& zs) {
    traj.t.push_back(t);
    traj.x.push_back(xs);
    traj.z.push_back(zs);
    traj.u.push_back(bundle.ctrl(xs));
    const double h = bundle.barrier.h(xs);
    traj.h.push_back(h);
    if (h < traj.min_h) traj.min_h = h;
    if (traj.has_v) {
      const double v =
          composite_cbf(bundle.barrier, *bundle.cert, sys, bundle.ctrl, xs, zs);
      traj.v.push_back(v);
      if (v < traj.min_v) traj.min_v = v;
    } else {
      traj.v.push_back(kNan);
    }
  };

  record(0.0, x, z);

  Vec k1x(sys.n_slow), k2x(sys.n_slow), k3x(sys.n_slow), k4x(sys.n_slow);
  Vec k1z(p), k2z(p), k3z(p), k4z(p);
  const double half = 0.5 * dt_eff;

  std::size_t i = 0;
  for (; i < n_steps; ++i) {
    stage_infeasible = false;
    rhs(x, z, k1x, k1z);
    rhs(x + half * k1x, z + half * k1z, k2x, k2z);
    rhs(x + half * k2x, z + half * k2z, k3x, k3z);
    rhs(x + dt_eff * k3x, z + dt_eff * k3z, k4x, k4z);
    x += (dt_eff / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    if (p > 0) z += (dt_eff / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    if (stage_infeasible) ++traj.infeasible_steps;

    const double t = static_cast<double>(i + 1) * dt_eff;
    if (!all_finite(x) || !all_finite(z)) {
      traj.diverged = true;
      traj.t_end = t;
      break;
    }
    if ((i + 1) % static_cast<std::size_t>(cfg.record_stride) == 0 ||
        i + 1 == n_steps)
      record(t, x, z);
  }
  traj.steps = traj.diverged ? i + 1 : n_steps;
  if (!traj.diverged) traj.t_end = static_cast<double>(n_steps) * dt_eff;
  traj.violation_time = detect_violation(traj.t, traj.h, 0.0);
  return traj;
}

std::optional<double> detect_violation(const std::vector<double>& t,
                                       const std::vector<double>& h,
                                       double threshold) {
  if (t.size() != h.size())
    throw ContractViolation("detect_violation: time/value size mismatch");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] < threshold) {
      if (i == 0) return t[0];
      const double span = h[i - 1] - h[i];
      if (!(span > 0.0)) return t[i];
      return t[i - 1] + (h[i - 1] - threshold) / span * (t[i] - t[i - 1]);
    }
  }
  return std::nullopt;
}

SweepReport sweep(const SystemBundle& bundle, double eps_min, double eps_max,
                  int count, const IntegrateConfig& base,
                  const std::function<void(std::size_t, const Trajectory&)>&
                      on_run) {
  if (count < 2) throw DomainError("sweep: need at least two eps values");
  if (!(eps_min > 0.0) || !(eps_max > eps_min))
    throw DomainError("sweep: eps range must satisfy 0 < eps_min < eps_max");

  SweepReport rep;
  rep.eps_values.resize(count);
  for (int i = 0; i < count; ++i)
    rep.eps_values[i] =
        eps_min + (eps_max - eps_min) * static_cast<double>(i) / (count - 1);
  rep.runs.resize(count);

  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    IntegrateConfig cfg = base;
    cfg.eps = rep.eps_values[i];
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory traj = integrate(bundle, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    SweepRun& run = rep.runs[i];
    run.eps = cfg.eps;
    run.min_h = traj.min_h;
    run.min_v = traj.min_v;
    run.has_v = traj.has_v;
    run.violation_time = traj.violation_time;
    run.diverged = traj.diverged;
    run.infeasible_steps = traj.infeasible_steps;
    run.runtime_s = std::chrono::duration<double>(t1 - t0).count();
    if (on_run) on_run(i, traj);
  });

  const auto safe = [&](int i) {
    return !rep.runs[i].diverged && rep.runs[i].min_h >= 0.0;
  };
  int last_safe = -1;
  for (int i = 0; i < count; ++i)
    if (safe(i)) last_safe = i;
  if (last_safe >= 0) rep.empirical_threshold = rep.eps_values[last_safe];
  rep.monotone = true;
  for (int i = 0; i <= last_safe; ++i)
    if (!safe(i)) rep.monotone = false;
  return rep;
}

TheoremCheckReport theorem_check(const SystemBundle& bundle,
                                 const EpsilonCertificate& cert,
                                 const TheoremCheckConfig& cfg) {
  if (!bundle.cert)
    throw UnsupportedModel("theorem_check: system has no boundary-layer certificate");

  TheoremCheckReport rep;
  rep.eps_bar = cert.eps_bar;
  rep.n_ic_requested = cfg.n_ic;

  if (cfg.force_eps) {
    if (!(*cfg.force_eps > 0.0))
      throw DomainError("theorem_check: forced eps must be positive");
    rep.eps_draws = {*cfg.force_eps};
    rep.out_of_certificate = *cfg.force_eps > cert.eps_bar;
  } else {
    if (!cert.valid || !std::isfinite(cert.eps_bar) || !(cert.eps_bar > 0.0))
      throw DomainError("theorem_check: certificate has no usable eps bound");
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    rep.eps_draws.resize(cfg.n_eps);
    for (int i = 0; i < cfg.n_eps; ++i)
      rep.eps_draws[i] = cert.eps_bar * uniform01(rng);
  }

  const auto ics =
      sample_ic_in_Cv(bundle.sys, bundle.ctrl, bundle.barrier, *bundle.cert,
                      bundle.domain, cfg.n_ic, cfg.seed, cfg.ic_attempts);
  rep.n_ic_used = static_cast<int>(ics.size());
  if (ics.empty()) {
    rep.vacuous = true;
    rep.pass = true;
    return rep;
  }

  const std::size_t total = ics.size() * rep.eps_draws.size();
  rep.runs.resize(total);
  parallel_for(total, [&](std::size_t k) {
    const auto& ic = ics[k / rep.eps_draws.size()];
    const double eps = rep.eps_draws[k % rep.eps_draws.size()];
    IntegrateConfig icfg;
    icfg.eps = eps;
    icfg.dt = cfg.dt;
    icfg.t_f = cfg.t_f;
    icfg.record_stride = cfg.record_stride;
    icfg.max_steps = cfg.step_budget;
    icfg.x0 = ic.first;
    icfg.z0 = ic.second;
    Trajectory traj = integrate(bundle, icfg);
    CheckRun& run = rep.runs[k];
    run.eps = eps;
    run.x0 = ic.first;
    run.z0 = ic.second;
    run.min_v = traj.min_v;
    run.t_end = traj.t_end;
    run.diverged = traj.diverged;
    run.violation_time = detect_violation(traj.t, traj.v, -cfg.v_tol);
  });

  for (const CheckRun& run : rep.runs)
    if (run.diverged || !(run.min_v >= -cfg.v_tol))
      rep.counterexamples.push_back(run);
  rep.pass = rep.counterexamples.empty();
  return rep;
}

int thread_count() {
  if (const char* env = std::getenv("SPSAFE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

}  // namespace spsafe
