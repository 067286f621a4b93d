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

#include "workbench/token.hpp"

#include <array>
#include <random>

#include "workbench/error.hpp"

namespace workbench {

std::string generate_workspace_token() {
  // std::random_device reads the kernel CSPRNG on Linux.
  thread_local std::random_device device;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string token(kWorkspaceTokenPrefix);
  token.reserve(token.size() + 64);
  for (int word = 0; word < 8; ++word) {
    std::uint32_t bits = device();
    for (int nibble = 0; nibble < 8; ++nibble) {
      token.push_back(kHex[bits & 0xF]);
      bits >>= 4;
    }
  }
  return token;
}

void TokenRegistry::bind(const std::string& token, TokenBinding binding) {
  std::lock_guard lock(mutex_);
  if (!tokens_.emplace(token, std::move(binding)).second) {
    throw Error(ErrorCode::Internal, "token already bound");
  }
}

void TokenRegistry::revoke(const std::string& token) {
  std::lock_guard lock(mutex_);
  tokens_.erase(token);
}

std::optional<TokenBinding> TokenRegistry::resolve(const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

std::size_t TokenRegistry::size() const {
  std::lock_guard lock(mutex_);
  return tokens_.size();
}

}  // namespace workbench
