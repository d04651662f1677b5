#include "spsafe/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace spsafe {

namespace {

inline std::uint32_t rotl(std::uint32_t v, int s) {
  return (v << s) | (v >> (32 - s));
}

}  // namespace

std::string sha1_hex(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  std::vector<std::uint8_t> msg(bytes, bytes + len);
  const std::uint64_t bits = static_cast<std::uint64_t>(len) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i)
    msg.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));

  std::uint32_t h[5] = {0x67452301u, 0xefcdab89u, 0x98badcfeu, 0x10325476u,
                        0xc3d2e1f0u};
  std::uint32_t w[80];
  for (std::size_t off = 0; off < msg.size(); off += 64) {
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(msg[off + 4 * i]) << 24) |
             (std::uint32_t(msg[off + 4 * i + 1]) << 16) |
             (std::uint32_t(msg[off + 4 * i + 2]) << 8) |
             std::uint32_t(msg[off + 4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5a827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ed9eba1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8f1bbcdcu;
      } else {
        f = b ^ c ^ d;
        k = 0xca62c1d6u;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  static const char* hex = "0123456789abcdef";
  std::string out(40, '0');
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) {
      const std::uint8_t byte = static_cast<std::uint8_t>(h[i] >> (24 - 8 * j));
      out[8 * i + 2 * j] = hex[byte >> 4];
      out[8 * i + 2 * j + 1] = hex[byte & 0xf];
    }
  return out;
}

std::string content_hash(const std::string& bytes) {
  std::string framed = "blob " + std::to_string(bytes.size());
  framed.push_back('\0');
  framed += bytes;
  return sha1_hex(framed.data(), framed.size());
}

Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw DomainError("expected a number, got: " + j.dump());
}

namespace {

Json json_vec(const Vec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v[i]));
  return arr;
}

Json json_opt_time(const std::optional<double>& t) {
  if (!t) return nullptr;
  return json_number(*t);
}

}  // namespace

Json to_json(const ConstantSet& c) {
  return Json{{"L_f", json_number(c.l_f)},       {"L_g", json_number(c.l_g)},
              {"L_h", json_number(c.l_h)},       {"L_rs", json_number(c.l_rs)},
              {"L_zeq_pi", json_number(c.l_zeq_pi)},
              {"L_pi", json_number(c.l_pi)},     {"L_alpha", json_number(c.l_alpha)}};
}

Json to_json(const EpsilonCertificate& cert) {
  return Json{{"eps1", json_number(cert.eps1)},
              {"eps2", json_number(cert.eps2)},
              {"eps_bar", json_number(cert.eps_bar)},
              {"nu", cert.nu},
              {"eta", cert.eta},
              {"K1", json_number(cert.k1)},
              {"K2", json_number(cert.k2)},
              {"b1", json_number(cert.b1)},
              {"b2", json_number(cert.b2)},
              {"b3", json_number(cert.b3)},
              {"b4", json_number(cert.b4)},
              {"valid", cert.valid},
              {"constants", to_json(cert.constants)}};
}

Json to_json(const SweepReport& rep) {
  Json runs = Json::array();
  for (const SweepRun& r : rep.runs) {
    Json jr{{"eps", r.eps},
            {"min_h", json_number(r.min_h)},
            {"violation_time", json_opt_time(r.violation_time)},
            {"diverged", r.diverged},
            {"infeasible_steps", r.infeasible_steps},
            {"runtime_s", r.runtime_s}};
    jr["min_V"] = r.has_v ? json_number(r.min_v) : Json(nullptr);
    runs.push_back(std::move(jr));
  }
  Json j{{"eps_values", rep.eps_values},
         {"runs", std::move(runs)},
         {"monotone", rep.monotone}};
  j["empirical_threshold"] = json_opt_time(rep.empirical_threshold);
  j["eps_bar_theoretical"] = json_opt_time(rep.eps_bar_theoretical);
  return j;
}

Json to_json(const TheoremCheckReport& rep) {
  const auto run_json = [](const CheckRun& r) {
    return Json{{"eps", r.eps},
                {"x0", json_vec(r.x0)},
                {"z0", json_vec(r.z0)},
                {"min_V", json_number(r.min_v)},
                {"t_end", r.t_end},
                {"diverged", r.diverged},
                {"violation_time", json_opt_time(r.violation_time)}};
  };
  double worst = std::numeric_limits<double>::infinity();
  for (const CheckRun& r : rep.runs) worst = std::min(worst, r.min_v);
  Json counterexamples = Json::array();
  for (const CheckRun& r : rep.counterexamples)
    counterexamples.push_back(run_json(r));
  return Json{{"eps_bar", json_number(rep.eps_bar)},
              {"out_of_certificate", rep.out_of_certificate},
              {"n_ic_requested", rep.n_ic_requested},
              {"n_ic_used", rep.n_ic_used},
              {"eps_draws", rep.eps_draws},
              {"n_runs", rep.runs.size()},
              {"worst_min_V", json_number(rep.runs.empty() ? 0.0 : worst)},
              {"counterexamples", std::move(counterexamples)},
              {"pass", rep.pass},
              {"vacuous", rep.vacuous}};
}

Json trajectory_summary(const Trajectory& traj) {
  Json j{{"min_h", json_number(traj.min_h)},
         {"violation_time", json_opt_time(traj.violation_time)},
         {"infeasible_steps", traj.infeasible_steps},
         {"diverged", traj.diverged},
         {"t_end", traj.t_end},
         {"samples", traj.t.size()}};
  j["min_V"] = traj.has_v ? json_number(traj.min_v) : Json(nullptr);
  j["integrator"] = Json{{"method", "rk4"},
                         {"eps", traj.eps},
                         {"dt", traj.dt},
                         {"dt_eff", traj.dt_eff},
                         {"t_f", traj.t_f_requested},
                         {"record_stride", traj.record_stride},
                         {"steps", traj.steps}};
  return j;
}

EpsilonCertificate certificate_from_json(const Json& j) {
  EpsilonCertificate cert;
  try {
    cert.eps1 = number_from_json(j.at("eps1"));
    cert.eps2 = number_from_json(j.at("eps2"));
    cert.eps_bar = number_from_json(j.at("eps_bar"));
    cert.nu = j.at("nu").get<double>();
    cert.eta = j.at("eta").get<double>();
    cert.k1 = number_from_json(j.at("K1"));
    cert.k2 = number_from_json(j.at("K2"));
    cert.b1 = number_from_json(j.at("b1"));
    cert.b2 = number_from_json(j.at("b2"));
    cert.b3 = number_from_json(j.at("b3"));
    cert.b4 = number_from_json(j.at("b4"));
    cert.valid = j.at("valid").get<bool>();
    const Json& c = j.at("constants");
    cert.constants.l_f = number_from_json(c.at("L_f"));
    cert.constants.l_g = number_from_json(c.at("L_g"));
    cert.constants.l_h = number_from_json(c.at("L_h"));
    cert.constants.l_rs = number_from_json(c.at("L_rs"));
    cert.constants.l_zeq_pi = number_from_json(c.at("L_zeq_pi"));
    cert.constants.l_pi = number_from_json(c.at("L_pi"));
    cert.constants.l_alpha = number_from_json(c.at("L_alpha"));
  } catch (const Json::exception& e) {
    throw DomainError(std::string("malformed certificate: ") + e.what());
  }
  return cert;
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open JSON output: " + path);
  f << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open JSON input: " + path);
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw DomainError("malformed JSON in " + path + ": " + e.what());
  }
}

}  // namespace spsafe
