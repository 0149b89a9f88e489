#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "m4sc/errors.hpp"

namespace m4sc {

/// Unsigned integer field or `fallback` when absent. nlohmann's own
/// conversion wraps negative numbers silently, so those are rejected here.
template <typename T>
T unsigned_value(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError("field '" + key + "' must be a non-negative integer, got " + v.dump());
  }
  return v.get<T>();
}

template <typename T>
std::vector<T> unsigned_list(const nlohmann::json& j, const std::string& key,
                             std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError("field '" + key + "' must be an array, got " + v.dump());
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number_unsigned()) {
      throw ConfigError("field '" + key + "' must hold non-negative integers, got " + e.dump());
    }
    out.push_back(e.get<T>());
  }
  return out;
}

}  // namespace m4sc
