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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace yasgd::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text. Blank lines and lines starting with '#' are
// ignored; a key may appear only once. Getters remember which keys were read
// so that misspelled keys can be reported.
class ConfigMap {
 public:
  static ConfigMap Parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigMap Load(const std::string& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  // Inserts or replaces a value (command-line overrides).
  void Set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  std::vector<double> GetDoubleList(const std::string& key) const;
  std::vector<std::int64_t> GetIntList(const std::string& key) const;
  std::optional<std::string> Find(const std::string& key) const;

  // Throws ConfigError naming every key that no getter has asked for.
  void CheckAllUsed() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// Comma-separated list, whitespace around items dropped; "" gives no items.
std::vector<std::string> SplitList(const std::string& text);

}  // namespace yasgd::harness
