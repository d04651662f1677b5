#include "spsafe/cli.hpp"

#include "spsafe/csv.hpp"
#include "spsafe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

namespace spsafe {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

void check_keys(const Json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw DomainError("unknown config key: " + where + it.key());
}

double num_field(const Json& j, const char* key, double cur,
                 const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_number())
    throw DomainError("field " + where + key + " must be a number");
  return v.get<double>();
}

int int_field(const Json& j, const char* key, int cur,
              const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_number_integer())
    throw DomainError("field " + where + key + " must be an integer");
  return v.get<int>();
}

std::uint64_t u64_field(const Json& j, const char* key, std::uint64_t cur,
                        const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!(v.is_number_unsigned() ||
        (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
    throw DomainError("field " + where + key +
                      " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

bool bool_field(const Json& j, const char* key, bool cur,
                const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_boolean())
    throw DomainError("field " + where + key + " must be a boolean");
  return v.get<bool>();
}

std::string string_field(const Json& j, const char* key, std::string cur,
                         const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_string())
    throw DomainError("field " + where + key + " must be a string");
  return v.get<std::string>();
}

Vec vec2_field(const Json& j, const char* key, Vec cur, double scale,
               const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw DomainError("field " + where + key +
                      " must be an array of two numbers");
  return (Vec(2) << v[0].get<double>() * scale, v[1].get<double>() * scale)
      .finished();
}

Mat obstacles_field(const Json& j, const char* key, Mat cur,
                    const std::string& where) {
  if (!j.contains(key)) return cur;
  const Json& v = j.at(key);
  if (!v.is_array())
    throw DomainError("field " + where + key +
                      " must be an array of [x, y] pairs");
  Mat out(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Json& row = v[i];
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
        !row[1].is_number())
      throw DomainError("field " + where + key +
                        " must be an array of [x, y] pairs");
    out(static_cast<Eigen::Index>(i), 0) = row[0].get<double>();
    out(static_cast<Eigen::Index>(i), 1) = row[1].get<double>();
  }
  return out;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw DomainError(std::string(what) + " must be positive");
}

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0))
    throw DomainError(std::string(what) + " must be non-negative");
}

void apply_toy(const Json& p, ToyParams& t) {
  check_keys(p, {"beta", "gamma_alpha", "eta", "x0", "z0_offset"}, "params.");
  t.beta = num_field(p, "beta", t.beta, "params.");
  t.gamma_alpha = num_field(p, "gamma_alpha", t.gamma_alpha, "params.");
  t.eta = num_field(p, "eta", t.eta, "params.");
  t.x0 = num_field(p, "x0", t.x0, "params.");
  t.z0_offset = num_field(p, "z0_offset", t.z0_offset, "params.");
  require_positive(t.beta, "params.beta");
  require_positive(t.gamma_alpha, "params.gamma_alpha");
  require_nonneg(t.eta, "params.eta");
  if (!(t.eta < t.gamma_alpha * t.beta * t.beta))
    throw DomainError(
        "params.eta must stay below gamma_alpha*beta^2 or the filter starts "
        "infeasible");
}

void apply_arm(const Json& p, ArmParams& a) {
  check_keys(p,
             {"m", "l", "j", "b", "r_motor", "l_tilde", "k_i", "k_w", "g0",
              "gamma", "eta", "rho", "sigma", "kp", "kd", "q_min_deg",
              "q_max_deg", "q_target_deg", "q0_deg", "omega0", "obstacles",
              "obstacle_radius", "omega_box", "current_box", "voltage_box"},
             "params.");
  a.m = num_field(p, "m", a.m, "params.");
  a.l = num_field(p, "l", a.l, "params.");
  a.j = num_field(p, "j", a.j, "params.");
  a.b = num_field(p, "b", a.b, "params.");
  a.r_motor = num_field(p, "r_motor", a.r_motor, "params.");
  a.l_tilde = num_field(p, "l_tilde", a.l_tilde, "params.");
  a.k_i = num_field(p, "k_i", a.k_i, "params.");
  a.k_w = num_field(p, "k_w", a.k_w, "params.");
  a.g0 = num_field(p, "g0", a.g0, "params.");
  a.gamma = num_field(p, "gamma", a.gamma, "params.");
  a.eta = num_field(p, "eta", a.eta, "params.");
  a.rho = num_field(p, "rho", a.rho, "params.");
  a.sigma = num_field(p, "sigma", a.sigma, "params.");
  a.kp = num_field(p, "kp", a.kp, "params.");
  a.kd = num_field(p, "kd", a.kd, "params.");
  a.q_min = vec2_field(p, "q_min_deg", a.q_min, kDegToRad, "params.");
  a.q_max = vec2_field(p, "q_max_deg", a.q_max, kDegToRad, "params.");
  a.q_target = vec2_field(p, "q_target_deg", a.q_target, kDegToRad, "params.");
  a.q0 = vec2_field(p, "q0_deg", a.q0, kDegToRad, "params.");
  a.omega0 = vec2_field(p, "omega0", a.omega0, 1.0, "params.");
  a.obstacles = obstacles_field(p, "obstacles", a.obstacles, "params.");
  a.obstacle_radius =
      num_field(p, "obstacle_radius", a.obstacle_radius, "params.");
  a.omega_box = num_field(p, "omega_box", a.omega_box, "params.");
  a.current_box = num_field(p, "current_box", a.current_box, "params.");
  a.voltage_box = num_field(p, "voltage_box", a.voltage_box, "params.");
  require_positive(a.m, "params.m");
  require_positive(a.l, "params.l");
  require_positive(a.j, "params.j");
  require_nonneg(a.b, "params.b");
  require_positive(a.r_motor, "params.r_motor");
  require_positive(a.l_tilde, "params.l_tilde");
  require_positive(a.k_i, "params.k_i");
  require_nonneg(a.k_w, "params.k_w");
  require_positive(a.gamma, "params.gamma");
  require_nonneg(a.eta, "params.eta");
  require_positive(a.rho, "params.rho");
  require_positive(a.sigma, "params.sigma");
  require_nonneg(a.obstacle_radius, "params.obstacle_radius");
  require_positive(a.omega_box, "params.omega_box");
  require_positive(a.current_box, "params.current_box");
  require_positive(a.voltage_box, "params.voltage_box");
  if (!(a.q_min[0] < a.q_max[0] && a.q_min[1] < a.q_max[1]))
    throw DomainError("params.q_min_deg must lie below params.q_max_deg");
}

void apply_pdual(const Json& p, PrimalDualParams& d) {
  check_keys(p, {"pi_des", "gamma_alpha", "eta", "x0", "u0", "lambda0"},
             "params.");
  d.pi_des = num_field(p, "pi_des", d.pi_des, "params.");
  d.gamma_alpha = num_field(p, "gamma_alpha", d.gamma_alpha, "params.");
  d.eta = num_field(p, "eta", d.eta, "params.");
  d.x0 = num_field(p, "x0", d.x0, "params.");
  d.u0 = num_field(p, "u0", d.u0, "params.");
  d.lambda0 = num_field(p, "lambda0", d.lambda0, "params.");
  require_positive(d.gamma_alpha, "params.gamma_alpha");
  require_nonneg(d.eta, "params.eta");
}

Json deg_pair(const Vec& v) {
  return Json::array({v[0] / kDegToRad, v[1] / kDegToRad});
}

Json params_json(const RunConfig& cfg) {
  if (cfg.system == "toy") {
    const ToyParams& t = cfg.toy;
    return Json{{"beta", t.beta},
                {"gamma_alpha", t.gamma_alpha},
                {"eta", t.eta},
                {"x0", t.x0},
                {"z0_offset", t.z0_offset}};
  }
  if (cfg.system == "arm") {
    const ArmParams& a = cfg.arm;
    Json obstacles = Json::array();
    for (Eigen::Index i = 0; i < a.obstacles.rows(); ++i)
      obstacles.push_back(
          Json::array({a.obstacles(i, 0), a.obstacles(i, 1)}));
    return Json{{"m", a.m},
                {"l", a.l},
                {"j", a.j},
                {"b", a.b},
                {"r_motor", a.r_motor},
                {"l_tilde", a.l_tilde},
                {"k_i", a.k_i},
                {"k_w", a.k_w},
                {"g0", a.g0},
                {"gamma", a.gamma},
                {"eta", a.eta},
                {"rho", a.rho},
                {"sigma", a.sigma},
                {"kp", a.kp},
                {"kd", a.kd},
                {"q_min_deg", deg_pair(a.q_min)},
                {"q_max_deg", deg_pair(a.q_max)},
                {"q_target_deg", deg_pair(a.q_target)},
                {"q0_deg", deg_pair(a.q0)},
                {"omega0", Json::array({a.omega0[0], a.omega0[1]})},
                {"obstacles", std::move(obstacles)},
                {"obstacle_radius", a.obstacle_radius},
                {"omega_box", a.omega_box},
                {"current_box", a.current_box},
                {"voltage_box", a.voltage_box}};
  }
  const PrimalDualParams& d = cfg.pdual;
  return Json{{"pi_des", d.pi_des}, {"gamma_alpha", d.gamma_alpha},
              {"eta", d.eta},       {"x0", d.x0},
              {"u0", d.u0},         {"lambda0", d.lambda0}};
}

std::string strip_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() > suffix.size() &&
      s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    return s.substr(0, s.size() - suffix.size());
  return s;
}

std::string basename_of(const std::string& path) {
  const auto pos = path.find_last_of("/\\");
  std::string base = pos == std::string::npos ? path : path.substr(pos + 1);
  return strip_suffix(base, ".csv");
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open input: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open output: " + path);
  f << bytes;
}

std::string csv_string(const SystemBundle& bundle, const Trajectory& traj) {
  std::ostringstream ss;
  write_trajectory_csv(ss, traj, bundle.sys.n_slow, bundle.sys.n_fast,
                       bundle.sys.n_input);
  return ss.str();
}

Json envelope(const RunConfig& cfg) {
  Json e;
  e["config"] = config_json(cfg);
  e["config_hash"] = content_hash(e["config"].dump());
  return e;
}

Json integrator_json(const RunConfig& cfg) {
  return Json{{"method", "rk4"},
              {"dt", cfg.dt},
              {"t_f", cfg.t_f},
              {"record_stride", cfg.record_stride},
              {"stiffness_guard", "dt_eff = min(dt, eps/50)"}};
}

EpsilonCertificate load_certificate(const std::string& path,
                                    Json* hashes = nullptr) {
  const std::string bytes = slurp(path);
  if (hashes) (*hashes)[path] = content_hash(bytes);
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::exception& e) {
    throw DomainError("malformed certificate file " + path + ": " + e.what());
  }
  return certificate_from_json(j.contains("certificate") ? j.at("certificate")
                                                         : j);
}

void downsample(const std::vector<double>& t, const std::vector<double>& y,
                std::vector<double>& out_t, std::vector<double>& out_y,
                std::size_t max_points = 1200) {
  const std::size_t n = t.size();
  const std::size_t stride = n > max_points ? (n + max_points - 1) / max_points : 1;
  for (std::size_t k = 0; k < n; k += stride) {
    out_t.push_back(t[k]);
    out_y.push_back(y[k]);
  }
  if (n > 0 && (n - 1) % stride != 0) {
    out_t.push_back(t[n - 1]);
    out_y.push_back(y[n - 1]);
  }
}

}  // namespace

RunConfig parse_config(const Json& j, const std::string& command) {
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  check_keys(j,
             {"command", "system", "params", "epsilon", "eps_min", "eps_max",
              "count", "dt", "t_f", "record_stride", "nu", "grid", "inflation",
              "seed", "force_epsilon", "n_ic", "n_eps", "v_tol", "step_budget",
              "out", "svg", "in", "certificate", "y"},
             "");

  RunConfig cfg;
  cfg.command = command;
  cfg.system = string_field(j, "system", cfg.system, "");
  if (cfg.system != "toy" && cfg.system != "arm" && cfg.system != "primal_dual")
    throw DomainError("system must be one of toy, arm, primal_dual");

  if (j.contains("params")) {
    const Json& p = j.at("params");
    if (!p.is_object()) throw DomainError("field params must be an object");
    if (cfg.system == "toy")
      apply_toy(p, cfg.toy);
    else if (cfg.system == "arm")
      apply_arm(p, cfg.arm);
    else
      apply_pdual(p, cfg.pdual);
  }

  const SystemBundle defaults = make_system(cfg.system);
  cfg.eps_min = num_field(j, "eps_min", defaults.default_eps_min, "");
  cfg.eps_max = num_field(j, "eps_max", defaults.default_eps_max, "");
  cfg.count = int_field(j, "count", defaults.default_eps_count, "");
  if (!(cfg.eps_min > 0.0) || !(cfg.eps_max > cfg.eps_min))
    throw DomainError("sweep range must satisfy 0 < eps_min < eps_max");
  if (cfg.count < 2) throw DomainError("count must be at least 2");

  if (j.contains("epsilon") && !j.at("epsilon").is_null()) {
    cfg.epsilon = num_field(j, "epsilon", 0.0, "");
    if (!(*cfg.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  }
  if (command == "simulate" && !cfg.epsilon)
    throw DomainError("simulate requires the field epsilon");

  cfg.dt = num_field(j, "dt", cfg.dt, "");
  cfg.t_f = num_field(j, "t_f", cfg.t_f, "");
  cfg.record_stride = int_field(j, "record_stride", cfg.record_stride, "");
  if (!(cfg.dt > 0.0)) throw DomainError("dt must be positive");
  if (!(cfg.t_f > cfg.dt)) throw DomainError("t_f must exceed dt");
  if (cfg.record_stride < 1)
    throw DomainError("record_stride must be at least 1");

  cfg.nu = num_field(j, "nu", cfg.nu, "");
  if (!(cfg.nu > 0.0 && cfg.nu < 1.0))
    throw DomainError("nu must lie strictly inside (0, 1)");
  cfg.grid = int_field(j, "grid", cfg.grid, "");
  if (cfg.grid < 2) throw DomainError("grid must be at least 2");
  cfg.inflation = num_field(j, "inflation", cfg.inflation, "");
  if (!(cfg.inflation >= 1.0)) throw DomainError("inflation must be >= 1");

  cfg.seed = u64_field(j, "seed", cfg.seed, "");
  if (j.contains("force_epsilon") && !j.at("force_epsilon").is_null()) {
    cfg.force_epsilon = num_field(j, "force_epsilon", 0.0, "");
    if (!(*cfg.force_epsilon > 0.0))
      throw DomainError("force_epsilon must be positive");
  }
  cfg.n_ic = int_field(j, "n_ic", cfg.n_ic, "");
  cfg.n_eps = int_field(j, "n_eps", cfg.n_eps, "");
  cfg.v_tol = num_field(j, "v_tol", cfg.v_tol, "");
  cfg.step_budget = u64_field(j, "step_budget", cfg.step_budget, "");
  if (cfg.n_ic < 0) throw DomainError("n_ic must be non-negative");
  if (cfg.n_eps < 1) throw DomainError("n_eps must be at least 1");
  require_nonneg(cfg.v_tol, "v_tol");
  if (cfg.step_budget < 1) throw DomainError("step_budget must be at least 1");

  cfg.out = string_field(j, "out", "", "");
  cfg.svg = bool_field(j, "svg", cfg.svg, "");
  if (j.contains("in")) {
    const Json& in = j.at("in");
    if (!in.is_array())
      throw DomainError("field in must be an array of paths");
    for (const Json& v : in) {
      if (!v.is_string())
        throw DomainError("field in must be an array of paths");
      cfg.inputs.push_back(v.get<std::string>());
    }
  }
  cfg.certificate = string_field(j, "certificate", cfg.certificate, "");
  cfg.y_column = string_field(j, "y", cfg.y_column, "");
  if (cfg.y_column.empty()) throw DomainError("y must name a CSV column");
  if (command == "plot" && cfg.inputs.empty())
    throw DomainError("plot requires at least one input CSV (in)");

  if (cfg.out.empty()) {
    if (command == "simulate")
      cfg.out = cfg.system + "_traj";
    else if (command == "sweep")
      cfg.out = cfg.system + "_sweep";
    else if (command == "epsbar")
      cfg.out = cfg.system + "_certificate";
    else if (command == "check")
      cfg.out = cfg.system + "_check";
    else
      cfg.out = "plot";
  }
  return cfg;
}

Json config_json(const RunConfig& cfg) {
  Json j{{"command", cfg.command},
         {"system", cfg.system},
         {"params", params_json(cfg)},
         {"eps_min", cfg.eps_min},
         {"eps_max", cfg.eps_max},
         {"count", cfg.count},
         {"dt", cfg.dt},
         {"t_f", cfg.t_f},
         {"record_stride", cfg.record_stride},
         {"nu", cfg.nu},
         {"grid", cfg.grid},
         {"inflation", cfg.inflation},
         {"seed", cfg.seed},
         {"n_ic", cfg.n_ic},
         {"n_eps", cfg.n_eps},
         {"v_tol", cfg.v_tol},
         {"step_budget", cfg.step_budget},
         {"out", cfg.out},
         {"svg", cfg.svg},
         {"in", cfg.inputs},
         {"certificate", cfg.certificate},
         {"y", cfg.y_column}};
  j["epsilon"] = cfg.epsilon ? Json(*cfg.epsilon) : Json(nullptr);
  j["force_epsilon"] =
      cfg.force_epsilon ? Json(*cfg.force_epsilon) : Json(nullptr);
  return j;
}

SystemBundle build_system(const RunConfig& cfg) {
  if (cfg.system == "toy") return toy_system(cfg.toy);
  if (cfg.system == "arm") return arm_system(cfg.arm);
  return primal_dual_system(cfg.pdual);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const SystemBundle bundle = build_system(cfg);
  IntegrateConfig icfg;
  icfg.eps = *cfg.epsilon;
  icfg.dt = cfg.dt;
  icfg.t_f = cfg.t_f;
  icfg.record_stride = cfg.record_stride;
  const Trajectory traj = integrate(bundle, icfg);

  const std::string stem = strip_suffix(cfg.out, ".csv");
  const std::string csv_path = stem + ".csv";
  const std::string csv = csv_string(bundle, traj);
  write_file(csv_path, csv);

  Json rep = envelope(cfg);
  rep["summary"] = trajectory_summary(traj);
  rep["outputs"] = Json{{"csv", csv_path}, {"csv_hash", content_hash(csv)}};
  write_json(stem + "_summary.json", rep);

  log << "wrote " << csv_path << " (" << traj.t.size()
      << " samples), min_h = " << format_double(traj.min_h);
  if (traj.violation_time)
    log << ", first violation at t = " << format_double(*traj.violation_time);
  log << "\n";
  if (traj.diverged) {
    log << "state diverged at t = " << format_double(traj.t_end)
        << "; partial trajectory written\n";
    return 3;
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const SystemBundle bundle = build_system(cfg);
  IntegrateConfig base;
  base.dt = cfg.dt;
  base.t_f = cfg.t_f;
  base.record_stride = cfg.record_stride;

  const std::string stem = strip_suffix(cfg.out, ".json");
  const int count = cfg.count;
  std::mutex io;
  std::vector<std::string> csv_paths(count), csv_hashes(count);
  std::vector<std::vector<double>> ts(count), hs(count);
  std::vector<char> unsafe(count, 0);

  const auto on_run = [&](std::size_t i, const Trajectory& traj) {
    char tag[24];
    std::snprintf(tag, sizeof(tag), "_run%02d.csv", static_cast<int>(i) + 1);
    const std::string path = stem + tag;
    const std::string csv = csv_string(bundle, traj);
    {
      std::lock_guard<std::mutex> lock(io);
      write_file(path, csv);
    }
    csv_paths[i] = path;
    csv_hashes[i] = content_hash(csv);
    downsample(traj.t, traj.h, ts[i], hs[i]);
    unsafe[i] = traj.min_h < 0.0 || traj.diverged;
  };

  SweepReport rep =
      sweep(bundle, cfg.eps_min, cfg.eps_max, count, base, on_run);

  Json in_hashes = Json::object();
  if (!cfg.certificate.empty()) {
    const EpsilonCertificate cert = load_certificate(cfg.certificate, &in_hashes);
    rep.eps_bar_theoretical = cert.eps_bar;
  }

  Json j = envelope(cfg);
  j["input_hashes"] = in_hashes;
  j["integrator"] = integrator_json(cfg);
  j["report"] = to_json(rep);
  Json outputs = Json::array();
  for (int i = 0; i < count; ++i)
    outputs.push_back(Json{{"csv", csv_paths[i]}, {"csv_hash", csv_hashes[i]}});
  j["outputs"] = std::move(outputs);
  write_json(stem + ".json", j);

  if (cfg.svg) {
    {
      std::vector<double> mh(count);
      for (int i = 0; i < count; ++i) mh[i] = rep.runs[i].min_h;
      std::vector<SvgSeries> series;
      series.push_back(SvgSeries{rep.eps_values, mh, "min h", "", false,
                                 false, true});
      if (rep.eps_bar_theoretical) {
        const double lo = *std::min_element(mh.begin(), mh.end());
        const double hi = *std::max_element(mh.begin(), mh.end());
        series.push_back(SvgSeries{{*rep.eps_bar_theoretical,
                                    *rep.eps_bar_theoretical},
                                   {lo, hi},
                                   "certified bound",
                                   "#000000",
                                   false,
                                   true,
                                   false});
      }
      SvgStyle style;
      style.title = bundle.name + ": worst barrier value per timescale ratio";
      style.x_label = "eps";
      style.y_label = "min h";
      render_svg(stem + "_min_h.svg", series, style);
    }
    {
      std::vector<SvgSeries> series;
      for (int i = 0; i < count; ++i) {
        SvgSeries s;
        s.x = ts[i];
        s.y = hs[i];
        s.label = "eps=" + format_double(rep.eps_values[i]);
        s.color = ramp_color(count > 1 ? double(i) / (count - 1) : 0.0);
        s.dash_dot = unsafe[i] != 0;
        series.push_back(std::move(s));
      }
      if (cfg.system == "primal_dual") {
        const SystemBundle ref = qp_reference_system(cfg.pdual);
        IntegrateConfig rcfg = base;
        rcfg.eps = 1.0;  // no fast state, value unused
        const Trajectory rt = integrate(ref, rcfg);
        SvgSeries s;
        downsample(rt.t, rt.h, s.x, s.y);
        s.label = "QP reference";
        s.color = "#000000";
        s.dashed = true;
        series.push_back(std::move(s));
      }
      SvgStyle style;
      style.title = bundle.name + ": barrier value along each run";
      style.x_label = "t [s]";
      style.y_label = "h";
      style.legend = count <= 12;
      render_svg(stem + "_h.svg", series, style);
    }
  }

  for (int i = 0; i < count; ++i) {
    const SweepRun& r = rep.runs[i];
    log << "eps = " << format_double(r.eps)
        << "  min_h = " << format_double(r.min_h);
    if (r.violation_time)
      log << "  violation at t = " << format_double(*r.violation_time);
    if (r.diverged) log << "  (diverged)";
    log << "\n";
  }
  if (rep.empirical_threshold)
    log << "largest safe eps = " << format_double(*rep.empirical_threshold)
        << (rep.monotone ? "" : "  (non-monotone sweep)") << "\n";
  else
    log << "no safe eps in the tested range\n";
  return 0;
}

int cmd_epsbar(const RunConfig& cfg, std::ostream& log) {
  const SystemBundle bundle = build_system(cfg);
  if (!bundle.cert) {
    log << "no smooth certificate available for system " << cfg.system
        << "\n";
    return 5;
  }
  const ConstantSet consts =
      estimate_constants(bundle.sys, bundle.ctrl, bundle.barrier,
                         bundle.domain, cfg.grid, cfg.inflation);
  const EpsilonCertificate cert =
      epsilon_bar(consts, *bundle.cert, bundle.barrier.eta, cfg.nu);

  Json j = envelope(cfg);
  j["certificate"] = to_json(cert);
  j["grid"] = cfg.grid;
  j["inflation"] = cfg.inflation;
  const std::string path = strip_suffix(cfg.out, ".json") + ".json";
  write_json(path, j);

  log << "eps1 = " << format_double(cert.eps1)
      << "  eps2 = " << format_double(cert.eps2)
      << "  eps_bar = " << format_double(cert.eps_bar) << "\n";
  log << "wrote " << path << "\n";
  if (!cert.valid) {
    log << "bound is not positive and finite; certificate marked invalid\n";
    return 4;
  }
  return 0;
}

int cmd_check(const RunConfig& cfg, std::ostream& log) {
  const SystemBundle bundle = build_system(cfg);
  if (!bundle.cert) {
    log << "no smooth certificate available for system " << cfg.system
        << "\n";
    return 5;
  }
  Json in_hashes = Json::object();
  EpsilonCertificate cert;
  if (!cfg.certificate.empty()) {
    cert = load_certificate(cfg.certificate, &in_hashes);
  } else {
    const ConstantSet consts =
        estimate_constants(bundle.sys, bundle.ctrl, bundle.barrier,
                           bundle.domain, cfg.grid, cfg.inflation);
    cert = epsilon_bar(consts, *bundle.cert, bundle.barrier.eta, cfg.nu);
  }

  TheoremCheckConfig tcfg;
  tcfg.n_ic = cfg.n_ic;
  tcfg.n_eps = cfg.n_eps;
  tcfg.seed = cfg.seed;
  tcfg.v_tol = cfg.v_tol;
  tcfg.dt = cfg.dt;
  tcfg.t_f = cfg.t_f;
  tcfg.record_stride = cfg.record_stride;
  tcfg.step_budget = cfg.step_budget;
  tcfg.force_eps = cfg.force_epsilon;
  const TheoremCheckReport rep = theorem_check(bundle, cert, tcfg);

  Json j = envelope(cfg);
  j["input_hashes"] = in_hashes;
  j["integrator"] = integrator_json(cfg);
  j["certificate"] = to_json(cert);
  j["report"] = to_json(rep);
  const std::string path = strip_suffix(cfg.out, ".json") + ".json";
  write_json(path, j);

  log << (rep.pass ? "PASS" : "FAIL") << ": " << rep.runs.size()
      << " runs, " << rep.counterexamples.size() << " counterexamples\n";
  if (rep.vacuous)
    log << "warning: no initial conditions found in the composite safe set; "
           "result is vacuous\n";
  if (rep.out_of_certificate)
    log << "forced eps exceeds the certified bound; result is informational\n";
  log << "wrote " << path << "\n";
  if (rep.pass || rep.out_of_certificate) return 0;
  return 1;
}

int cmd_plot(const RunConfig& cfg, std::ostream& log) {
  std::vector<SvgSeries> series;
  for (const std::string& path : cfg.inputs) {
    const std::string bytes = slurp(path);
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line))
      throw DomainError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cols;
    {
      std::istringstream hs(line);
      std::string cell;
      while (std::getline(hs, cell, ',')) cols.push_back(cell);
    }
    const auto find_col = [&](const std::string& name) {
      const auto it = std::find(cols.begin(), cols.end(), name);
      if (it == cols.end())
        throw DomainError("column " + name + " not found in " + path);
      return static_cast<std::size_t>(it - cols.begin());
    };
    const std::size_t tc = find_col("t");
    const std::size_t yc = find_col(cfg.y_column);
    std::vector<double> t, y;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::istringstream rs(line);
      std::string cell;
      std::size_t idx = 0;
      double tv = 0.0, yv = 0.0;
      while (std::getline(rs, cell, ',')) {
        if (idx == tc) tv = std::strtod(cell.c_str(), nullptr);
        if (idx == yc) yv = std::strtod(cell.c_str(), nullptr);
        ++idx;
      }
      if (idx != cols.size())
        throw DomainError("ragged CSV row in " + path);
      t.push_back(tv);
      y.push_back(yv);
    }
    SvgSeries s;
    downsample(t, y, s.x, s.y);
    s.label = basename_of(path);
    if (cfg.y_column == "h" || cfg.y_column == "V") {
      for (double v : y)
        if (v < 0.0) {
          s.dash_dot = true;
          break;
        }
    }
    series.push_back(std::move(s));
  }

  SvgStyle style;
  style.x_label = "t [s]";
  style.y_label = cfg.y_column;
  const std::string path = strip_suffix(cfg.out, ".svg") + ".svg";
  render_svg(path, series, style);
  log << "wrote " << path << "\n";
  return 0;
}

int run_command(const Json& j, const std::string& command, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = parse_config(j, command);
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (command == "simulate") return cmd_simulate(cfg, log);
    if (command == "sweep") return cmd_sweep(cfg, log);
    if (command == "epsbar") return cmd_epsbar(cfg, log);
    if (command == "check") return cmd_check(cfg, log);
    if (command == "plot") return cmd_plot(cfg, log);
    throw DomainError("unknown command: " + command);
  } catch (const EstimationError& e) {
    log << "estimation error: " << e.what() << "\n";
    return 4;
  } catch (const CertificateError& e) {
    log << "certificate error: " << e.what() << "\n";
    return 5;
  } catch (const UnsupportedModel& e) {
    log << e.what() << "\n";
    return 5;
  } catch (const DomainError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spsafe
