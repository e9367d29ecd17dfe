#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace rdelab {

using Json = nlohmann::ordered_json;

// Serialises with every float printed at 17 significant digits so that a
// parse/dump cycle is bit-exact. Keys keep insertion order.
std::string dump_json(const Json& j, int indent = 2);

// +inf / -inf travel as the strings "inf" / "-inf".
Json real_to_json(double v);
double real_from_json(const Json& j);

// Writes to path.tmp then renames over path.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace rdelab
