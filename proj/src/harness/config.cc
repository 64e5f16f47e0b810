// Copyright 2026 The YASGD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "yasgd/harness/config.h"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace yasgd::harness {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t ToInt(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not an integer", key, v));
  }
  return x;
}

double ToDouble(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || std::isnan(x)) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not a number", key, v));
  }
  return x;
}

}  // namespace

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  if (Trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  return out;
}

ConfigMap ConfigMap::Parse(const std::string& text, const std::string& origin) {
  ConfigMap m;
  m.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", origin, lineno));
    }
    const std::string key = Trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("{}:{}: empty key", origin, lineno));
    if (m.values_.count(key)) {
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", origin, lineno, key));
    }
    m.values_[key] = Trim(t.substr(eq + 1));
  }
  return m;
}

ConfigMap ConfigMap::Load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << f.rdbuf();
  return Parse(ss.str(), path);
}

std::optional<std::string> ConfigMap::Find(const std::string& key) const {
  used_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigMap::GetString(const std::string& key, const std::string& fallback) const {
  return Find(key).value_or(fallback);
}

std::int64_t ConfigMap::GetInt(const std::string& key, std::int64_t fallback) const {
  const auto v = Find(key);
  return v ? ToInt(key, *v) : fallback;
}

double ConfigMap::GetDouble(const std::string& key, double fallback) const {
  const auto v = Find(key);
  return v ? ToDouble(key, *v) : fallback;
}

bool ConfigMap::GetBool(const std::string& key, bool fallback) const {
  const auto v = Find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", key, *v));
}

std::vector<double> ConfigMap::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  if (const auto v = Find(key)) {
    for (const auto& item : SplitList(*v)) out.push_back(ToDouble(key, item));
  }
  return out;
}

std::vector<std::int64_t> ConfigMap::GetIntList(const std::string& key) const {
  std::vector<std::int64_t> out;
  if (const auto v = Find(key)) {
    for (const auto& item : SplitList(*v)) out.push_back(ToInt(key, item));
  }
  return out;
}

void ConfigMap::CheckAllUsed() const {
  std::string unknown;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw ConfigError(fmt::format("{}: unknown config keys: {}", origin_, unknown));
}

}  // namespace yasgd::harness
