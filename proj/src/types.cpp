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

#include "workbench/types.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace workbench {

namespace {

bool is_lower_alnum(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

bool parse_fixed(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc() && ptr == first + len;
}

}  // namespace

Timestamp now() noexcept {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(Clock::now());
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  auto day = floor<days>(ts);
  year_month_day ymd{day};
  hh_mm_ss tod{ts - day};
  char buf[40];
  auto ms = tod.subseconds().count();
  if (ms == 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), long(tod.hours().count()),
                  long(tod.minutes().count()), long(tod.seconds().count()));
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), long(tod.hours().count()),
                  long(tod.minutes().count()), long(tod.seconds().count()), long(ms));
  }
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  int y, mo, d, h, mi, s;
  if (text.size() < 20) return std::nullopt;
  if (!parse_fixed(text, 0, 4, y) || text[4] != '-' || !parse_fixed(text, 5, 2, mo) ||
      text[7] != '-' || !parse_fixed(text, 8, 2, d) || text[10] != 'T' ||
      !parse_fixed(text, 11, 2, h) || text[13] != ':' || !parse_fixed(text, 14, 2, mi) ||
      text[16] != ':' || !parse_fixed(text, 17, 2, s)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  int millis = 0;
  if (text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits < 3) millis = millis * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 3; ++i) millis *= 10;
  }
  if (pos + 1 != text.size() || text[pos] != 'Z') return std::nullopt;
  year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;
  auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{millis};
  return time_point_cast<milliseconds>(tp);
}

bool is_valid_project_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > 63) return false;
  for (char c : name) {
    if (!is_lower_alnum(c) && c != '_') return false;
  }
  return true;
}

bool is_valid_user_id(std::string_view user) noexcept {
  if (user.empty() || user.size() > 63 || !is_lower_alnum(user.front())) return false;
  for (char c : user) {
    if (!is_lower_alnum(c) && c != '.' && c != '-') return false;
  }
  return true;
}

bool is_valid_dataset_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > 63) return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

}  // namespace workbench
