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

#include "workbench/error.hpp"

namespace workbench {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidName: return "InvalidName";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::NoSuchProject: return "NoSuchProject";
    case ErrorCode::NoSuchDataset: return "NoSuchDataset";
    case ErrorCode::AlreadyMember: return "AlreadyMember";
    case ErrorCode::NotAMember: return "NotAMember";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::SelfShare: return "SelfShare";
    case ErrorCode::NoSuchShare: return "NoSuchShare";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::AlreadyRunning: return "AlreadyRunning";
    case ErrorCode::NoSuchInstance: return "NoSuchInstance";
    case ErrorCode::InsufficientResources: return "InsufficientResources";
    case ErrorCode::InvalidAllocatable: return "InvalidAllocatable";
    case ErrorCode::NodeConflict: return "NodeConflict";
    case ErrorCode::NoSuchReservation: return "NoSuchReservation";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::NameInUse: return "NameInUse";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::DuplicateRoute: return "DuplicateRoute";
    case ErrorCode::UnknownRoute: return "UnknownRoute";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::PathEscape: return "PathEscape";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MethodUnsupported: return "MethodUnsupported";
    case ErrorCode::ResourceDenied: return "ResourceDenied";
    case ErrorCode::SessionDead: return "SessionDead";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::NoSuchSession: return "NoSuchSession";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
    case ErrorCode::PathEscape:
      return 403;
    case ErrorCode::NoSuchProject:
    case ErrorCode::NoSuchDataset:
    case ErrorCode::NotAMember:
    case ErrorCode::NoSuchShare:
    case ErrorCode::NoSuchInstance:
    case ErrorCode::NoSuchReservation:
    case ErrorCode::UnknownRoute:
    case ErrorCode::NotFound:
    case ErrorCode::NoSuchSession:
    case ErrorCode::UnknownInstance:
      return 404;
    case ErrorCode::DuplicateName:
    case ErrorCode::AlreadyMember:
    case ErrorCode::AlreadyRunning:
    case ErrorCode::NameInUse:
    case ErrorCode::PortInUse:
    case ErrorCode::DuplicateRoute:
    case ErrorCode::NodeConflict:
    case ErrorCode::SessionBusy:
    case ErrorCode::SessionDead:
      return 409;
    case ErrorCode::InsufficientResources:
    case ErrorCode::PoolExhausted:
    case ErrorCode::ResourceDenied:
      return 503;
    case ErrorCode::BackendUnreachable:
    case ErrorCode::BackendError:
      return 502;
    case ErrorCode::Internal:
      return 500;
    default:
      return 400;
  }
}

}  // namespace workbench
