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
#include <iosfwd>
#include <mutex>
#include <optional>
#include <regex>
#include <source_location>
#include <string>
#include <vector>

namespace yasgd::harness {

inline constexpr const char* kMlperfPrefix = ":::MLPv0.5.0";

// Wall-clock instant as whole seconds since the Unix epoch plus nanoseconds,
// printed with exactly nine fractional digits.
struct LogTimestamp {
  std::int64_t seconds = 0;
  std::int32_t nanos = 0;

  static LogTimestamp Now();
  static LogTimestamp Parse(const std::string& text);  // throws std::invalid_argument
  std::string ToString() const;
  // this - earlier, in seconds.
  double SecondsSince(const LogTimestamp& earlier) const;
};

// One log line:
//   :::MLPv0.5.0 <model> <ts> (<file>:<line>) <tag>[: <value>]
// `value` is already serialized (a number, a quoted string or a JSON object).
std::string FormatMlperfLine(const std::string& model_name, const LogTimestamp& ts,
                             const std::string& file, int line, const std::string& tag,
                             const std::optional<std::string>& value = std::nullopt);

// Regex every emitted line must match; groups: model, timestamp, file, line,
// tag, value (possibly empty).
const std::regex& MlperfLineRegex();

// `{"epoch": E, "value": A}` with A in shortest round-trip form.
std::string EvalAccuracyValue(int epoch, double accuracy);

class MlperfLogger {
 public:
  // A disabled logger (non-zero ranks) drops everything. `sink` may be null.
  MlperfLogger(std::string model_name, bool enabled, std::ostream* sink);

  void Event(const std::string& tag, const std::optional<std::string>& value = std::nullopt,
             std::source_location where = std::source_location::current());
  void Event(const std::string& tag, std::int64_t value,
             std::source_location where = std::source_location::current());

  std::vector<std::string> lines() const;

 private:
  std::string model_name_;
  bool enabled_;
  std::ostream* sink_;
  mutable std::mutex mu_;
  std::vector<std::string> lines_;
};

struct ParsedLog {
  LogTimestamp run_start;
  LogTimestamp run_final;
  double elapsed_s = 0.0;
  struct Eval {
    int epoch = 0;
    double accuracy = 0.0;
  };
  std::vector<Eval> evals;  // in epoch order
  std::optional<double> final_accuracy() const {
    return evals.empty() ? std::nullopt : std::optional<double>(evals.back().accuracy);
  }
};

// Lines that do not start with the MLPerf prefix are skipped. Throws
// std::invalid_argument when a prefixed line is malformed or when run_start
// or run_final is missing.
ParsedLog ParseLog(const std::vector<std::string>& lines);
ParsedLog ParseLogFile(const std::string& path);

}  // namespace yasgd::harness
