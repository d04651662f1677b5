#include "spsafe/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace spsafe {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_slow,
                          int n_fast, int n_input) {
  os << "t";
  for (int i = 1; i <= n_slow; ++i) os << ",x" << i;
  for (int i = 1; i <= n_fast; ++i) os << ",z" << i;
  for (int i = 1; i <= n_input; ++i) os << ",u" << i;
  os << ",h,V\r\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    os << format_double(traj.t[k]);
    for (int i = 0; i < n_slow; ++i) os << ',' << format_double(traj.x[k][i]);
    for (int i = 0; i < n_fast; ++i) os << ',' << format_double(traj.z[k][i]);
    for (int i = 0; i < n_input; ++i) os << ',' << format_double(traj.u[k][i]);
    os << ',' << format_double(traj.h[k]);
    os << ',' << format_double(traj.v[k]);
    os << "\r\n";
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          int n_slow, int n_fast, int n_input) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open CSV output: " + path);
  write_trajectory_csv(f, traj, n_slow, n_fast, n_input);
}

}  // namespace spsafe
