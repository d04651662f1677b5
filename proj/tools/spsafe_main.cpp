#include "spsafe/cli.hpp"
#include "spsafe/report.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct Flags {
  std::string config, system, out, certificate, y;
  double epsilon = 0, eps_min = 0, eps_max = 0, dt = 0, tf = 0, nu = 0;
  double inflation = 0, force_eps = 0, v_tol = 0;
  int count = 0, grid = 0, n_ic = 0, n_eps = 0, record_stride = 0;
  std::uint64_t seed = 0, step_budget = 0;
  bool svg = false;
  std::vector<std::string> inputs;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow/fast safety toolkit: certified timescale bounds and "
               "closed-loop sweeps"};
  app.require_subcommand(1);
  Flags fl;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", fl.config,
                    "JSON config file; explicit flags override its fields");
    cmd->add_option("--system", fl.system, "toy | arm | primal_dual");
    cmd->add_option("--out", fl.out, "output path stem");
    cmd->add_option("--dt", fl.dt, "integrator step (s)");
    cmd->add_option("--tf", fl.tf, "horizon (s)");
    cmd->add_option("--record-stride", fl.record_stride,
                    "keep every n-th sample");
    cmd->add_option("--seed", fl.seed, "RNG seed");
  };
  const auto add_certgrid = [&](CLI::App* cmd) {
    cmd->add_option("--nu", fl.nu, "margin split in (0,1)");
    cmd->add_option("--grid", fl.grid, "samples per axis for the bounds");
    cmd->add_option("--inflation", fl.inflation,
                    "multiplier on every estimated bound");
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "integrate one closed-loop run; CSV plus JSON summary");
  add_common(sim);
  sim->add_option("--epsilon", fl.epsilon, "timescale ratio");

  CLI::App* sw = app.add_subcommand(
      "sweep", "integrate a family of runs over a timescale range");
  add_common(sw);
  sw->add_option("--eps-min", fl.eps_min, "smallest timescale ratio");
  sw->add_option("--eps-max", fl.eps_max, "largest timescale ratio");
  sw->add_option("--count", fl.count, "number of runs");
  sw->add_flag("--svg", fl.svg, "also render the two figures");
  sw->add_option("--certificate", fl.certificate,
                 "bound file to overlay on the figures");

  CLI::App* eb = app.add_subcommand(
      "epsbar", "estimate the constants and write the certified bound");
  add_common(eb);
  add_certgrid(eb);

  CLI::App* ck = app.add_subcommand(
      "check", "Monte Carlo forward-invariance check below the bound");
  add_common(ck);
  add_certgrid(ck);
  ck->add_option("--certificate", fl.certificate,
                 "reuse a bound written by epsbar instead of re-estimating");
  ck->add_option("--force-epsilon", fl.force_eps,
                 "test one fixed ratio instead of drawing below the bound");
  ck->add_option("--n-ic", fl.n_ic, "initial conditions to sample");
  ck->add_option("--n-eps", fl.n_eps, "timescale ratios to draw");
  ck->add_option("--v-tol", fl.v_tol, "tolerance on the composite value");
  ck->add_option("--step-budget", fl.step_budget,
                 "per-run cap on integrator steps");

  CLI::App* pl =
      app.add_subcommand("plot", "render trajectory CSVs into one SVG");
  pl->add_option("--config", fl.config,
                 "JSON config file; explicit flags override its fields");
  pl->add_option("--in", fl.inputs, "input CSV (repeatable)");
  pl->add_option("--y", fl.y, "column to plot against t");
  pl->add_option("--out", fl.out, "output path stem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();

  spsafe::Json j = spsafe::Json::object();
  if (cmd->count("--config")) {
    try {
      j = spsafe::read_json(fl.config);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    if (!j.is_object()) {
      std::cerr << "config error: config must be a JSON object\n";
      return 2;
    }
  }

  const auto set_if = [&](const char* flag, const char* key, const auto& val) {
    if (cmd->get_option_no_throw(flag) && cmd->count(flag)) j[key] = val;
  };
  set_if("--system", "system", fl.system);
  set_if("--epsilon", "epsilon", fl.epsilon);
  set_if("--eps-min", "eps_min", fl.eps_min);
  set_if("--eps-max", "eps_max", fl.eps_max);
  set_if("--count", "count", fl.count);
  set_if("--dt", "dt", fl.dt);
  set_if("--tf", "t_f", fl.tf);
  set_if("--record-stride", "record_stride", fl.record_stride);
  set_if("--nu", "nu", fl.nu);
  set_if("--grid", "grid", fl.grid);
  set_if("--inflation", "inflation", fl.inflation);
  set_if("--seed", "seed", fl.seed);
  set_if("--force-epsilon", "force_epsilon", fl.force_eps);
  set_if("--n-ic", "n_ic", fl.n_ic);
  set_if("--n-eps", "n_eps", fl.n_eps);
  set_if("--v-tol", "v_tol", fl.v_tol);
  set_if("--step-budget", "step_budget", fl.step_budget);
  set_if("--out", "out", fl.out);
  set_if("--svg", "svg", fl.svg);
  set_if("--in", "in", fl.inputs);
  set_if("--certificate", "certificate", fl.certificate);
  set_if("--y", "y", fl.y);

  return spsafe::run_command(j, name, std::cerr);
}
