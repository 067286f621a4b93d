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

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "workbench/types.hpp"

namespace workbench {

inline constexpr std::string_view kWorkspaceTokenPrefix = "wst_";

// "wst_" followed by 32 random bytes in lowercase hex.
std::string generate_workspace_token();

struct TokenBinding {
  ProjectName project;
  UserId user;
  InstanceId instance;
  friend bool operator==(const TokenBinding&, const TokenBinding&) = default;
};

// Live workspace tokens and what each one is bound to. A token is valid
// exactly while its workspace is live.
class TokenRegistry {
 public:
  void bind(const std::string& token, TokenBinding binding);
  void revoke(const std::string& token);
  std::optional<TokenBinding> resolve(const std::string& token) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, TokenBinding> tokens_;
};

}  // namespace workbench
