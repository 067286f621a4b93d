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

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace workbench {

// Integer resource amount tagged with its unit so that memory and CPU can
// never be mixed up in scheduler arithmetic.
template <typename Tag>
class Quantity {
 public:
  constexpr Quantity() = default;
  constexpr explicit Quantity(std::int64_t value) : value_(value) {}

  constexpr std::int64_t value() const noexcept { return value_; }

  constexpr Quantity& operator+=(Quantity other) noexcept {
    value_ += other.value_;
    return *this;
  }
  constexpr Quantity& operator-=(Quantity other) noexcept {
    value_ -= other.value_;
    return *this;
  }
  friend constexpr Quantity operator+(Quantity a, Quantity b) noexcept { return a += b; }
  friend constexpr Quantity operator-(Quantity a, Quantity b) noexcept { return a -= b; }
  friend constexpr auto operator<=>(Quantity, Quantity) = default;

 private:
  std::int64_t value_ = 0;
};

using Mebibytes = Quantity<struct MebibytesTag>;
using Millicores = Quantity<struct MillicoresTag>;

using ProjectName = std::string;
using UserId = std::string;
using DatasetName = std::string;
using InstanceId = std::string;
using NodeId = std::string;
using Port = std::uint16_t;

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;

Timestamp now() noexcept;

// ISO-8601 UTC, e.g. "2024-01-01T00:00:00Z" or with ".123" milliseconds.
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view text);

// Lowercase alphanumerics and underscore, 1-63 characters.
bool is_valid_project_name(std::string_view name) noexcept;
// Lowercase alphanumerics, '.' and '-', starting alphanumeric, 1-63
// characters. No underscore keeps "{project}__{user}" injective.
bool is_valid_user_id(std::string_view user) noexcept;
// Alphanumerics (either case), '_' and '-', 1-63 characters.
bool is_valid_dataset_name(std::string_view name) noexcept;

struct ProjectUser {
  ProjectName project;
  UserId user;
  friend auto operator<=>(const ProjectUser&, const ProjectUser&) = default;
};

}  // namespace workbench
