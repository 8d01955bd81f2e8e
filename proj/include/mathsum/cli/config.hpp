#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mathsum/errors.hpp"

namespace mathsum::cli {

inline constexpr const char* kConfigEnv = "MATHSUM_CONFIG";

using Settings = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline Settings parse_json_config(const std::string& text, const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path + " must be a JSON object");
  Settings s;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) {
      s[k] = v.get<std::string>();
    } else if (v.is_boolean()) {
      s[k] = v.get<bool>() ? "true" : "false";
    } else if (v.is_number_integer()) {
      s[k] = std::to_string(v.get<long long>());
    } else if (v.is_number()) {
      s[k] = v.dump();
    } else {
      throw ConfigError("config key " + k + " must be a scalar");
    }
  }
  return s;
}

}  // namespace detail

// A config file is either a flat JSON object or "key = value" lines with
// '#' comments. Values are kept as strings and parsed by whichever component
// reads the key.
inline Settings parse_config(const std::string& text, const std::string& path = "<config>") {
  const std::string body = detail::trim(text);
  if (!body.empty() && body.front() == '{') return detail::parse_json_config(body, path);
  Settings s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    s[key] = detail::trim(line.substr(eq + 1));
  }
  return s;
}

inline Settings load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

// The explicit --config path wins; otherwise the environment variable, if set.
inline std::string resolve_config_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kConfigEnv); env && *env) return env;
  return {};
}

}  // namespace mathsum::cli
