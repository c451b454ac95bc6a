// Serialization helpers shared by the CLI and the tests: JSON conversion for
// the core value types (complex numbers travel as [re, im] pairs), strict
// key checking for configuration objects, and deterministic number
// formatting for CSV output.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dp3/monodromy.hpp"
#include "dp3/numeric.hpp"
#include "dp3/params.hpp"

namespace dp3 {

using json = nlohmann::json;

json to_json(cx z);
cx cx_from_json(const json& j, const std::string& where);

json to_json(const EquationParams& p);
EquationParams params_from_json(const json& j);

json to_json(const MonodromyData& md);
MonodromyData monodromy_from_json(const json& j);

json to_json(const ManifoldReport& rep);

// Throws ConfigError naming the first key of j that is not in allowed.
void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& context);

// Shortest exact decimal form (printf %.17g); used everywhere a number is
// written to CSV so output is byte-for-byte reproducible.
std::string format_double(double x);

// FNV-1a hash of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const json& j);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dp3
