#pragma once

// The single table every tolerance and sweep size defaults from. Versioned so
// that outputs can record which table produced them.

#include <string>

#include <json.hpp>

namespace tracelab {

inline constexpr int kDefaultsVersion = 1;

/// {"version": kDefaultsVersion, "<section>": {"<key>": value, ...}, ...}
const nlohmann::json& defaults_table();

/// defaults_table()[section][key] as double; throws InvalidArgument if absent.
double default_value(const std::string& section, const std::string& key);

std::string library_version();

}  // namespace tracelab
