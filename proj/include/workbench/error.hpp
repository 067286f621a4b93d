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

#include <stdexcept>
#include <string>
#include <string_view>

namespace workbench {

// Every failure the control plane reports carries one of these codes. The
// REST layer maps them to HTTP statuses with http_status().
enum class ErrorCode {
  InvalidArgument,
  InvalidName,
  DuplicateName,
  NoSuchProject,
  NoSuchDataset,
  AlreadyMember,
  NotAMember,
  Forbidden,
  SelfShare,
  NoSuchShare,
  Unauthorized,
  AlreadyRunning,
  NoSuchInstance,
  InsufficientResources,
  InvalidAllocatable,
  NodeConflict,
  NoSuchReservation,
  BackendError,
  NameInUse,
  PortInUse,
  PoolExhausted,
  DuplicateRoute,
  UnknownRoute,
  BackendUnreachable,
  NotFound,
  PathEscape,
  InvalidConfig,
  ParseError,
  MethodUnsupported,
  ResourceDenied,
  SessionDead,
  SessionBusy,
  NoSuchSession,
  UnknownInstance,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  explicit Error(ErrorCode code)
      : std::runtime_error(std::string(to_string(code))), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace workbench
