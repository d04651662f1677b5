#pragma once

#include "spsafe/composite.hpp"
#include "spsafe/sim.hpp"

#include <json.hpp>

#include <string>

namespace spsafe {

using Json = nlohmann::json;

std::string sha1_hex(const void* data, std::size_t len);

/// Hash with the blob framing "blob <len>\0<bytes>" so `git hash-object`
/// over the same bytes agrees.
std::string content_hash(const std::string& bytes);

/// Finite values stay numbers; nan and the infinities become string tags so
/// the document remains valid JSON and round-trips.
Json json_number(double v);
double number_from_json(const Json& j);

Json to_json(const ConstantSet& c);
Json to_json(const EpsilonCertificate& cert);
Json to_json(const SweepReport& rep);
Json to_json(const TheoremCheckReport& rep);

/// Scalar summary of one run: extrema, violation time, integrator echo.
Json trajectory_summary(const Trajectory& traj);

EpsilonCertificate certificate_from_json(const Json& j);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace spsafe
