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

#include "yasgd/harness/mlperf_log.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <fmt/core.h>
#include <json.hpp>

namespace yasgd::harness {

LogTimestamp LogTimestamp::Now() {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  return {ns / 1'000'000'000, static_cast<std::int32_t>(ns % 1'000'000'000)};
}

LogTimestamp LogTimestamp::Parse(const std::string& text) {
  const auto dot = text.find('.');
  if (dot == std::string::npos || dot == 0 || text.size() - dot - 1 != 9 ||
      !std::all_of(text.begin(), text.end(), [](char c) { return c == '.' || (c >= '0' && c <= '9'); })) {
    throw std::invalid_argument(fmt::format("bad log timestamp '{}'", text));
  }
  return {std::stoll(text.substr(0, dot)), std::stoi(text.substr(dot + 1))};
}

std::string LogTimestamp::ToString() const { return fmt::format("{}.{:09d}", seconds, nanos); }

double LogTimestamp::SecondsSince(const LogTimestamp& earlier) const {
  return static_cast<double>(seconds - earlier.seconds) + (nanos - earlier.nanos) * 1e-9;
}

std::string FormatMlperfLine(const std::string& model_name, const LogTimestamp& ts,
                             const std::string& file, int line, const std::string& tag,
                             const std::optional<std::string>& value) {
  if (tag.empty()) throw std::invalid_argument("log tag must be nonempty");
  std::string s = fmt::format("{} {} {} ({}:{}) {}", kMlperfPrefix, model_name, ts.ToString(), file, line, tag);
  if (value) s += ": " + *value;
  return s;
}

const std::regex& MlperfLineRegex() {
  static const std::regex re(
      R"(^:::MLPv0\.5\.0 (\S+) (\d+\.\d{9}) \(([^()]*):(\d+)\) ([a-z][a-z0-9_]*)(?:: (.+))?$)");
  return re;
}

std::string EvalAccuracyValue(int epoch, double accuracy) {
  return fmt::format("{{\"epoch\": {}, \"value\": {}}}", epoch, accuracy);
}

MlperfLogger::MlperfLogger(std::string model_name, bool enabled, std::ostream* sink)
    : model_name_(std::move(model_name)), enabled_(enabled), sink_(sink) {}

namespace {

// Path relative to the source tree root, like the short paths other loggers print.
std::string ShortPath(const char* file) {
  std::string f(file);
  for (const char* root : {"/src/", "/tools/", "/tests/"}) {
    const auto pos = f.rfind(root);
    if (pos != std::string::npos) return f.substr(pos + 1);
  }
  return f;
}

}  // namespace

void MlperfLogger::Event(const std::string& tag, const std::optional<std::string>& value,
                         std::source_location where) {
  if (!enabled_) return;
  const std::string line = FormatMlperfLine(model_name_, LogTimestamp::Now(), ShortPath(where.file_name()),
                                            static_cast<int>(where.line()), tag, value);
  std::lock_guard<std::mutex> lock(mu_);
  lines_.push_back(line);
  if (sink_) *sink_ << line << std::endl;
}

void MlperfLogger::Event(const std::string& tag, std::int64_t value, std::source_location where) {
  Event(tag, std::optional<std::string>(std::to_string(value)), where);
}

std::vector<std::string> MlperfLogger::lines() const {
  std::lock_guard<std::mutex> lock(mu_);
  return lines_;
}

ParsedLog ParseLog(const std::vector<std::string>& lines) {
  ParsedLog out;
  bool have_start = false;
  bool have_final = false;
  for (const auto& raw : lines) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(kMlperfPrefix, 0) != 0) continue;
    std::smatch m;
    if (!std::regex_match(line, m, MlperfLineRegex())) {
      throw std::invalid_argument(fmt::format("malformed log line '{}'", line));
    }
    const std::string tag = m[5];
    if (tag == "run_start") {
      out.run_start = LogTimestamp::Parse(m[2]);
      have_start = true;
    } else if (tag == "run_final") {
      out.run_final = LogTimestamp::Parse(m[2]);
      have_final = true;
    } else if (tag == "eval_accuracy") {
      try {
        const auto j = nlohmann::json::parse(m[6].str());
        out.evals.push_back({j.at("epoch").get<int>(), j.at("value").get<double>()});
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(fmt::format("bad eval_accuracy value in '{}': {}", line, e.what()));
      }
    }
  }
  if (!have_start) throw std::invalid_argument("log has no run_start event");
  if (!have_final) throw std::invalid_argument("log has no run_final event");
  std::stable_sort(out.evals.begin(), out.evals.end(),
                   [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  out.elapsed_s = out.run_final.SecondsSince(out.run_start);
  return out;
}

ParsedLog ParseLogFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument(fmt::format("cannot open log '{}'", path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) lines.push_back(line);
  return ParseLog(lines);
}

}  // namespace yasgd::harness
