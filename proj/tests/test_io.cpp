#include "spsafe/cli.hpp"
#include "spsafe/csv.hpp"
#include "spsafe/report.hpp"
#include "spsafe/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace spsafe;
namespace fs = std::filesystem;

namespace {

Vec v1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

fs::path test_dir() {
  fs::path dir = fs::temp_directory_path() / "spsafe_io_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

Trajectory tiny_trajectory() {
  Trajectory tr;
  tr.t = {0.0, 0.5};
  tr.x = {v1(1.0), v1(0.25)};
  tr.z = {v1(2.0), v1(-0.5)};
  tr.u = {v1(3.0), v1(0.1)};
  tr.h = {0.5, 0.4};
  tr.v = {std::numeric_limits<double>::quiet_NaN(), 0.3};
  tr.min_h = 0.4;
  return tr;
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-30, -2.5e17, 0.0, 1.0, -0.5,
                   3.141592653589793, 5e-324}) {
    std::string s = format_double(v);
    double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("trajectory CSV layout") {
  std::ostringstream os;
  write_trajectory_csv(os, tiny_trajectory(), 1, 1, 1);
  std::string text = os.str();
  CHECK(text ==
        "t,x1,z1,u1,h,V\r\n"
        "0,1,2,3,0.5,nan\r\n"
        "0.5,0.25,-0.5,0.1,0.4,0.3\r\n");
}

TEST_CASE("trajectory CSV covers every state block per system") {
  for (const char* name : {"toy", "arm", "primal_dual"}) {
    SystemBundle b = make_system(name);
    IntegrateConfig cfg;
    cfg.eps = 0.01;
    cfg.dt = 1e-3;
    cfg.t_f = 0.05;
    Trajectory traj = integrate(b, cfg);
    std::ostringstream os;
    write_trajectory_csv(os, traj, b.sys.n_slow, b.sys.n_fast, b.sys.n_input);
    std::string text = os.str();
    std::istringstream lines(text);
    std::string header;
    std::getline(lines, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::size_t cols = count_occurrences(header, ",") + 1;
    CHECK(cols == static_cast<std::size_t>(1 + b.sys.n_slow + b.sys.n_fast +
                                           b.sys.n_input + 2));
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == traj.t.size());

    // byte-for-byte deterministic
    std::ostringstream os2;
    write_trajectory_csv(os2, traj, b.sys.n_slow, b.sys.n_fast, b.sys.n_input);
    CHECK(os2.str() == text);
  }
}

TEST_CASE("trajectory CSV file writing") {
  fs::path p = test_dir() / "tiny.csv";
  write_trajectory_csv(p.string(), tiny_trajectory(), 1, 1, 1);
  std::string bytes = slurp(p);
  CHECK(bytes.find("\r\n") != std::string::npos);
  CHECK_THROWS_AS(write_trajectory_csv(
                      (test_dir() / "no_such_dir" / "x.csv").string(),
                      tiny_trajectory(), 1, 1, 1),
                  DomainError);
}

TEST_CASE("sha1 matches the published test vectors") {
  CHECK(sha1_hex("", 0) == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex("abc", 3) == "a9993e364706816aba3e25717850c26c9cd0d89d");
  std::string fox = "The quick brown fox jumps over the lazy dog";
  CHECK(sha1_hex(fox.data(), fox.size()) ==
        "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
}

TEST_CASE("content hash uses blob framing") {
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(content_hash("what is up, doc?") ==
        "bd9dbf5aae1a3862dd1526723246b20206e5fc37");
}

TEST_CASE("json numbers survive specials") {
  CHECK(json_number(1.5).is_number());
  CHECK(json_number(std::numeric_limits<double>::quiet_NaN()) == Json("nan"));
  CHECK(json_number(std::numeric_limits<double>::infinity()) == Json("inf"));
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == Json("-inf"));
  CHECK(number_from_json(Json(2.25)) == 2.25);
  CHECK(std::isnan(number_from_json(Json("nan"))));
  CHECK(number_from_json(Json("inf")) ==
        std::numeric_limits<double>::infinity());
  CHECK(number_from_json(Json("-inf")) ==
        -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(number_from_json(Json("wat")), DomainError);
  double third = 1.0 / 3.0;
  CHECK(number_from_json(json_number(third)) == third);
}

TEST_CASE("certificate serialization round trips including infinities") {
  ConstantSet cs;
  cs.l_f = 0.0;  // K2 = 0 makes eps1 infinite
  cs.l_h = 1.0;
  cs.l_rs = 2.0;
  cs.l_zeq_pi = 1.0;
  cs.l_pi = 0.5;
  cs.l_g = 1.25;
  cs.l_alpha = 2.0;
  LyapunovCertificate lyap = quadratic_certificate(-Mat::Identity(1, 1));
  EpsilonCertificate ec = epsilon_bar(cs, lyap, 0.5, 0.5);
  REQUIRE(std::isinf(ec.eps1));

  EpsilonCertificate back = certificate_from_json(to_json(ec));
  CHECK(back.eps1 == ec.eps1);
  CHECK(back.eps2 == ec.eps2);
  CHECK(back.eps_bar == ec.eps_bar);
  CHECK(back.nu == ec.nu);
  CHECK(back.eta == ec.eta);
  CHECK(back.k1 == ec.k1);
  CHECK(back.k2 == ec.k2);
  CHECK(back.b1 == ec.b1);
  CHECK(back.b2 == ec.b2);
  CHECK(back.b3 == ec.b3);
  CHECK(back.b4 == ec.b4);
  CHECK(back.valid == ec.valid);
  CHECK(back.constants.l_f == ec.constants.l_f);
  CHECK(back.constants.l_g == ec.constants.l_g);
  CHECK(back.constants.l_h == ec.constants.l_h);
  CHECK(back.constants.l_rs == ec.constants.l_rs);
  CHECK(back.constants.l_zeq_pi == ec.constants.l_zeq_pi);
  CHECK(back.constants.l_pi == ec.constants.l_pi);
  CHECK(back.constants.l_alpha == ec.constants.l_alpha);

  CHECK_THROWS_AS(certificate_from_json(Json::object()), DomainError);
  CHECK_THROWS_AS(certificate_from_json(Json{{"eps_bar", "soon"}}),
                  DomainError);
}

TEST_CASE("json files round trip and malformed input is flagged") {
  fs::path p = test_dir() / "roundtrip.json";
  Json doc{{"a", 1}, {"b", Json::array({1, 2, 3})}};
  write_json(p.string(), doc);
  CHECK(read_json(p.string()) == doc);
  CHECK_THROWS_AS(read_json((test_dir() / "missing.json").string()),
                  DomainError);
  fs::path bad = test_dir() / "bad.json";
  std::ofstream(bad) << "{not json";
  CHECK_THROWS_AS(read_json(bad.string()), DomainError);
}

TEST_CASE("sweep and check reports serialize their key fields") {
  SystemBundle toy = toy_system();
  IntegrateConfig base;
  base.dt = 1e-3;
  base.t_f = 1.0;
  SweepReport rep = sweep(toy, 0.05, 1.0, 3, base);
  Json j = to_json(rep);
  CHECK(j.at("eps_values").size() == 3);
  CHECK(j.at("runs").size() == 3);
  CHECK(j.at("runs")[0].contains("min_h"));
  CHECK(j.at("runs")[0].contains("min_V"));
  CHECK(j.at("runs")[0].contains("runtime_s"));
  CHECK(j.contains("monotone"));
  CHECK(j.contains("empirical_threshold"));
  CHECK(j.contains("eps_bar_theoretical"));

  Json ts = trajectory_summary(integrate(toy, [] {
    IntegrateConfig c;
    c.eps = 0.01;
    c.dt = 1e-3;
    c.t_f = 0.1;
    return c;
  }()));
  CHECK(ts.at("integrator").at("method") == "rk4");
  CHECK(ts.contains("min_h"));
  CHECK(ts.contains("min_V"));
  CHECK(ts.at("samples").get<std::size_t>() > 0);
}

TEST_CASE("svg rendering is deterministic and self-contained") {
  SvgSeries s;
  s.x = {0.0, 1.0, 2.0};
  s.y = {1.0, -0.5, 0.25};
  s.label = "run";
  SvgStyle style;
  style.title = "demo";
  style.x_label = "t";
  style.y_label = "h";
  std::string a = render_svg({s}, style);
  std::string b = render_svg({s}, style);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  // the xmlns namespace identifier is the only URI allowed
  CHECK(a.find("href") == std::string::npos);
  CHECK(a.find("<script") == std::string::npos);
  CHECK(a.find("http://", a.find("http://") + 1) == std::string::npos);
  CHECK(a.find("polyline") != std::string::npos);
  CHECK(a.find("demo") != std::string::npos);
}

TEST_CASE("svg rendering rejects empty or inconsistent input") {
  CHECK_THROWS_AS(render_svg({}, SvgStyle{}), DomainError);
  SvgSeries nans;
  nans.x = {0.0, 1.0};
  nans.y = {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(render_svg({nans}, SvgStyle{}), DomainError);
  SvgSeries ragged;
  ragged.x = {0.0, 1.0};
  ragged.y = {1.0};
  CHECK_THROWS_AS(render_svg({ragged}, SvgStyle{}), ContractViolation);
}

TEST_CASE("svg styling hooks") {
  SvgSeries flat;
  flat.x = {0.0, 1.0};
  flat.y = {2.0, 2.0};  // degenerate y-range still renders
  SvgStyle style;
  style.legend = false;
  std::string doc = render_svg({flat}, style);
  CHECK(doc.find("polyline") != std::string::npos);

  SvgSeries solid = flat;
  SvgSeries offender;
  offender.x = {0.0, 1.0};
  offender.y = {1.0, -1.0};
  offender.dash_dot = true;
  std::string two = render_svg({solid, offender}, style);
  CHECK(count_occurrences(two, "stroke-dasharray=\"8 4 2 4\"") == 1);

  SvgSeries dot;
  dot.x = {0.5};
  dot.y = {0.5};
  std::string single = render_svg({dot}, style);
  CHECK(single.find("<circle") != std::string::npos);

  CHECK(ramp_color(0.0) == "#1a9641");
  CHECK(ramp_color(1.0) == "#d7191c");
  CHECK(ramp_color(0.5).rfind("#", 0) == 0);
}

TEST_CASE("config parsing fills defaults from the system bundle") {
  RunConfig cfg = parse_config(Json::object(), "sweep");
  CHECK(cfg.system == "toy");
  CHECK(cfg.eps_min == doctest::Approx(0.001));
  CHECK(cfg.eps_max == doctest::Approx(2.0));
  CHECK(cfg.count == 10);
  CHECK(cfg.out == "toy_sweep");
  CHECK(!cfg.epsilon.has_value());

  RunConfig arm = parse_config(Json{{"system", "arm"}}, "sweep");
  CHECK(arm.eps_min == doctest::Approx(0.001));
  CHECK(arm.eps_max == doctest::Approx(0.035));
  CHECK(arm.count == 10);
  CHECK(arm.out == "arm_sweep");

  RunConfig pd = parse_config(Json{{"system", "primal_dual"}}, "sweep");
  CHECK(pd.eps_min == doctest::Approx(0.01));
  CHECK(pd.eps_max == doctest::Approx(0.3));
  CHECK(pd.count == 20);
}

TEST_CASE("config parsing validates fields and rejects unknown keys") {
  CHECK_THROWS_AS(parse_config(Json{{"systm", "toy"}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"params", Json{{"betaa", 1.0}}}}, "sweep"),
                  DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"dt", "fast"}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"count", 1}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"eps_min", 0.5}, {"eps_max", 0.4}},
                               "sweep"),
                  DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"nu", 1.5}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"t_f", 1e-4}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"record_stride", 0}}, "sweep"),
                  DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"v_tol", -1.0}}, "sweep"), DomainError);
  CHECK_THROWS_AS(parse_config(Json::object(), "simulate"), DomainError);
  CHECK_THROWS_AS(parse_config(Json{{"epsilon", -0.5}}, "simulate"),
                  DomainError);
  CHECK_THROWS_AS(parse_config(Json::object(), "plot"), DomainError);
  CHECK_THROWS_AS(parse_config(Json(3), "sweep"), DomainError);
  // toy invariant: the margin cannot exceed the rate at the peak
  CHECK_THROWS_AS(
      parse_config(Json{{"params", Json{{"eta", 2.0}}}}, "sweep"),
      DomainError);
}

TEST_CASE("angle-valued arm parameters are taken in degrees") {
  Json doc{{"system", "arm"},
           {"params", Json{{"q_target_deg", Json::array({90.0, 0.0})}}}};
  RunConfig cfg = parse_config(doc, "sweep");
  CHECK(cfg.arm.q_target[0] == doctest::Approx(M_PI / 2.0));
  CHECK(cfg.arm.q_target[1] == 0.0);
}

TEST_CASE("effective configuration echo reparses to the same document") {
  Json doc{{"system", "toy"},
           {"epsilon", 0.05},
           {"t_f", 2.5},
           {"params", Json{{"beta", 1.5}}}};
  RunConfig cfg = parse_config(doc, "simulate");
  Json echo = config_json(cfg);
  RunConfig cfg2 = parse_config(echo, "simulate");
  Json echo2 = config_json(cfg2);
  CHECK(echo.dump(2) == echo2.dump(2));
  CHECK(echo.at("t_f") == 2.5);
  CHECK(echo.at("params").at("beta") == 1.5);
  CHECK(echo.at("force_epsilon").is_null());
}

TEST_CASE("command dispatch maps failures to exit codes") {
  std::ostringstream log;
  CHECK(run_command(Json{{"nu", 1.5}}, "sweep", log) == 2);
  CHECK(run_command(Json::object(), "simulate", log) == 2);
  CHECK(run_command(Json{{"system", "primal_dual"}}, "epsbar", log) == 5);

  fs::path bad_cert = test_dir() / "bad_cert.json";
  std::ofstream(bad_cert) << "{not json";
  Json check_doc{{"system", "toy"},
                 {"certificate", bad_cert.string()},
                 {"n_ic", 1},
                 {"n_eps", 1},
                 {"step_budget", 100},
                 {"out", (test_dir() / "chk").string()}};
  CHECK(run_command(check_doc, "check", log) == 2);
}

TEST_CASE("simulate command writes the trajectory and its summary") {
  fs::path out = test_dir() / "toy_run.csv";
  std::error_code ec;
  fs::remove(out, ec);
  fs::remove(test_dir() / "toy_run_summary.json", ec);

  std::ostringstream log;
  Json doc{{"system", "toy"},
           {"epsilon", 0.05},
           {"t_f", 0.5},
           {"out", out.string()}};
  CHECK(run_command(doc, "simulate", log) == 0);
  REQUIRE(fs::exists(out));
  fs::path summary_path = test_dir() / "toy_run_summary.json";
  REQUIRE(fs::exists(summary_path));

  Json summary = read_json(summary_path.string());
  CHECK(summary.at("config").at("epsilon") == 0.05);
  CHECK(summary.at("config_hash").get<std::string>().size() == 40);
  CHECK(summary.at("summary").at("integrator").at("method") == "rk4");
  // the recorded output hash matches the bytes on disk
  CHECK(summary.at("outputs").at("csv_hash").get<std::string>() ==
        content_hash(slurp(out)));
}

TEST_CASE("certificate and check commands chain through a file") {
  fs::path cert_out = test_dir() / "toy_cert";
  std::ostringstream log;
  Json eps_doc{{"system", "toy"}, {"grid", 21}, {"out", cert_out.string()}};
  REQUIRE(run_command(eps_doc, "epsbar", log) == 0);
  fs::path cert_file = test_dir() / "toy_cert.json";
  REQUIRE(fs::exists(cert_file));

  Json envelope = read_json(cert_file.string());
  EpsilonCertificate ec = certificate_from_json(envelope.at("certificate"));
  CHECK(ec.valid);
  CHECK(ec.eps_bar > 0.0);

  Json check_doc{{"system", "toy"},
                 {"certificate", cert_file.string()},
                 {"n_ic", 4},
                 {"n_eps", 2},
                 {"step_budget", 20000},
                 {"out", (test_dir() / "toy_chk").string()}};
  CHECK(run_command(check_doc, "check", log) == 0);
  Json chk = read_json((test_dir() / "toy_chk.json").string());
  CHECK(chk.at("report").at("pass") == true);
  CHECK(chk.at("certificate").at("eps_bar") ==
        envelope.at("certificate").at("eps_bar"));
}

TEST_CASE("sweep command emits per-run CSVs and an aggregate report") {
  fs::path out = test_dir() / "toy_sweep_cmd";
  std::ostringstream log;
  Json doc{{"system", "toy"}, {"eps_min", 0.05}, {"eps_max", 0.5},
           {"count", 3},      {"t_f", 0.5},      {"out", out.string()},
           {"svg", true}};
  CHECK(run_command(doc, "sweep", log) == 0);
  REQUIRE(fs::exists(test_dir() / "toy_sweep_cmd.json"));
  for (int i = 1; i <= 3; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "toy_sweep_cmd_run%02d.csv", i);
    CHECK(fs::exists(test_dir() / name));
  }
  CHECK(fs::exists(test_dir() / "toy_sweep_cmd_min_h.svg"));
  CHECK(fs::exists(test_dir() / "toy_sweep_cmd_h.svg"));
  Json rep = read_json((test_dir() / "toy_sweep_cmd.json").string());
  CHECK(rep.at("report").at("eps_values").size() == 3);
  CHECK(rep.at("outputs").size() == 3);

  // plotting one of the produced CSVs back out
  Json plot_doc{{"in", Json::array({(test_dir() / "toy_sweep_cmd_run01.csv")
                                        .string()})},
                {"y", "h"},
                {"out", (test_dir() / "replot").string()}};
  CHECK(run_command(plot_doc, "plot", log) == 0);
  CHECK(fs::exists(test_dir() / "replot.svg"));
}
