// Copyright 2026 The Workbench Authors
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

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "workbench/error.hpp"
#include "workbench/spark.hpp"

namespace workbench {

namespace {

constexpr std::array<std::string_view, 7> kKeys = {
    "livy.url", "method", "driverMemory", "driverCores", "executorMemory", "executorCores", "numExecutors"};

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "config.yml line " + std::to_string(line) + ": " + what);
}

// Returns the scalar with quotes and escapes removed.
std::string parse_scalar(std::string_view raw, std::size_t line) {
  if (raw.empty()) return {};
  if (raw.front() != '"') {
    auto hash = raw.find(" #");
    return std::string(trim(raw.substr(0, hash)));
  }
  std::string out;
  std::size_t i = 1;
  for (; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\') {
      if (i + 1 >= raw.size()) parse_error(line, "dangling escape");
      out.push_back(raw[++i]);
    } else if (c == '"') {
      break;
    } else {
      out.push_back(c);
    }
  }
  if (i >= raw.size()) parse_error(line, "unterminated string");
  auto rest = trim(raw.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') parse_error(line, "unexpected text after string value");
  return out;
}

std::int64_t parse_count(const std::string& value, std::string_view field) {
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + " must be an integer, got '" + value + "'");
  }
  return n;
}

}  // namespace

bool is_valid_size_string(std::string_view size) noexcept {
  if (size.size() < 2) return false;
  char unit = size.back();
  if (unit != 'm' && unit != 'g') return false;
  size.remove_suffix(1);
  return std::all_of(size.begin(), size.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Mebibytes size_to_mebibytes(std::string_view size) {
  if (!is_valid_size_string(size)) throw Error(ErrorCode::InvalidConfig, "bad size string: " + std::string(size));
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(size.data(), size.data() + size.size() - 1, n);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidConfig, "size out of range: " + std::string(size));
  return Mebibytes{size.back() == 'g' ? n * 1024 : n};
}

void validate(const SparkSessionConfig& cfg) {
  auto bad = [](std::string_view field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + ": " + why);
  };
  auto printable = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= 0x20 && c != 0x7f; });
  };
  if (cfg.livy_url.empty() || !printable(cfg.livy_url) ||
      !(cfg.livy_url.rfind("http://", 0) == 0 || cfg.livy_url.rfind("https://", 0) == 0)) {
    bad("livy.url", "must be an http(s) URL");
  }
  if (cfg.method.empty() || !printable(cfg.method)) bad("method", "must be a non-empty string");
  if (!is_valid_size_string(cfg.driver_memory)) bad("driverMemory", "must match [0-9]+(m|g)");
  if (!is_valid_size_string(cfg.executor_memory)) bad("executorMemory", "must match [0-9]+(m|g)");
  if (cfg.driver_cores < 1) bad("driverCores", "must be >= 1");
  if (cfg.executor_cores < 1) bad("executorCores", "must be >= 1");
  if (cfg.num_executors < 1) bad("numExecutors", "must be >= 1");
}

std::string render_config_yml(const SparkSessionConfig& cfg) {
  validate(cfg);
  std::string out = "default:\n";
  out += "  livy.url: " + quote(cfg.livy_url) + "\n";
  out += "  method: " + quote(cfg.method) + "\n";
  out += "  driverMemory: " + quote(cfg.driver_memory) + "\n";
  out += "  driverCores: " + std::to_string(cfg.driver_cores) + "\n";
  out += "  executorMemory: " + quote(cfg.executor_memory) + "\n";
  out += "  executorCores: " + std::to_string(cfg.executor_cores) + "\n";
  out += "  numExecutors: " + std::to_string(cfg.num_executors) + "\n";
  return out;
}

std::optional<std::string> suggest_config_key(std::string_view unknown) {
  std::string_view best;
  std::size_t best_distance = SIZE_MAX;
  for (auto key : kKeys) {
    auto d = edit_distance(unknown, key);
    if (d < best_distance) {
      best_distance = d;
      best = key;
    }
  }
  if (best_distance <= 2) return std::string(best);
  std::optional<std::string> prefixed;
  for (auto key : kKeys) {
    if (!unknown.empty() && key.substr(0, unknown.size()) == unknown) {
      if (prefixed) return std::nullopt;
      prefixed = std::string(key);
    }
  }
  return prefixed;
}

SparkSessionConfig parse_config_yml(std::string_view text) {
  std::map<std::string, std::string, std::less<>> values;
  bool in_section = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    ++line_no;
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    bool indented = line.front() == ' ' || line.front() == '\t';
    if (!indented) {
      if (content != "default:") parse_error(line_no, "expected 'default:' section, got '" + std::string(content) + "'");
      if (in_section) parse_error(line_no, "duplicate 'default:' section");
      in_section = true;
      continue;
    }
    if (!in_section) parse_error(line_no, "key outside the 'default:' section");
    auto colon = content.find(':');
    if (colon == std::string_view::npos) parse_error(line_no, "expected 'key: value'");
    auto key = trim(content.substr(0, colon));
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      std::string what = "unknown key '" + std::string(key) + "'";
      if (auto hint = suggest_config_key(key)) what += " (did you mean '" + *hint + "'?)";
      parse_error(line_no, what);
    }
    if (values.count(key)) parse_error(line_no, "duplicate key '" + std::string(key) + "'");
    values.emplace(std::string(key), parse_scalar(trim(content.substr(colon + 1)), line_no));
  }
  if (!in_section) throw Error(ErrorCode::ParseError, "config.yml line 1: missing 'default:' section");
  for (auto key : kKeys) {
    if (!values.count(key)) throw Error(ErrorCode::InvalidConfig, "missing field " + std::string(key));
  }

  SparkSessionConfig cfg;
  cfg.livy_url = values.at("livy.url");
  cfg.method = values.at("method");
  cfg.driver_memory = values.at("driverMemory");
  cfg.driver_cores = parse_count(values.at("driverCores"), "driverCores");
  cfg.executor_memory = values.at("executorMemory");
  cfg.executor_cores = parse_count(values.at("executorCores"), "executorCores");
  cfg.num_executors = parse_count(values.at("numExecutors"), "numExecutors");
  validate(cfg);
  return cfg;
}

}  // namespace workbench
