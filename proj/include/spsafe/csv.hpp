#pragma once

#include "spsafe/sim.hpp"

#include <iosfwd>
#include <string>

namespace spsafe {

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for specials.
std::string format_double(double v);

/// Header is t,x1..,z1..,u1..,h,V; numbers keep full double precision.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int n_slow,
                          int n_fast, int n_input);

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          int n_slow, int n_fast, int n_input);

}  // namespace spsafe
