#pragma once

#include "moran/distribution.hpp"
#include "moran/numtheory.hpp"
#include "moran/radix.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace moran {

using json = nlohmann::json;

json schedule_to_json(const PrimeSchedule& s);
// Recomputes L and N and checks them against the file when present.
PrimeSchedule schedule_from_json(const json& j);

json context_to_json(const BaseContext& ctx);
json certificate_to_json(const PartitionCertificate& c);

// FNV-1a 64 over the canonical (sorted-key, compact) dump.
std::uint64_t fnv1a64(const std::string& bytes);
std::string config_hash(const json& cfg);

}  // namespace moran
