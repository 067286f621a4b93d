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
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "workbench/types.hpp"

namespace workbench {

struct CaseInsensitiveLess {
  bool operator()(std::string_view a, std::string_view b) const noexcept;
  using is_transparent = void;
};

using Headers = std::multimap<std::string, std::string, CaseInsensitiveLess>;

inline constexpr Port kNodePortRangeStart = 30000;
inline constexpr Port kNodePortRangeEnd = 32767;

// Node-port pool. allocate() always hands out the lowest free port.
class PortPool {
 public:
  PortPool(Port range_start = kNodePortRangeStart, Port range_end = kNodePortRangeEnd);

  Port allocate();
  void release(Port port);
  bool is_allocated(Port port) const;
  bool contains(Port port) const noexcept { return port >= range_start_ && port <= range_end_; }
  std::size_t allocated_count() const;
  std::size_t capacity() const noexcept { return std::size_t(range_end_) - range_start_ + 1; }
  Port range_start() const noexcept { return range_start_; }
  Port range_end() const noexcept { return range_end_; }

 private:
  Port range_start_;
  Port range_end_;
  mutable std::mutex mutex_;
  std::set<Port> free_;
};

struct RouteEntry {
  ProjectName project;
  UserId user;
  std::string backend_host;
  Port backend_port = 0;
  std::string token;
  Timestamp registered_at{};
};

struct ProxyRequest {
  std::string method = "GET";
  std::string path;   // /workspace/{project}/{user}/...
  std::string query;  // without '?'
  Headers headers;
  std::string body;
};

struct ProxyResponse {
  int status = 0;
  Headers headers;
  std::string body;
};

// Headers that describe one hop and are never forwarded.
bool is_hop_by_hop_header(std::string_view name) noexcept;

// Bearer token from "Authorization: Bearer ..." or the workbench_token cookie.
std::optional<std::string> extract_token(const Headers& headers);

inline constexpr std::string_view kTokenCookie = "workbench_token";

struct ParsedWorkspacePath {
  ProjectName project;
  UserId user;
  std::string rest;  // always starts with '/'
};

std::optional<ParsedWorkspacePath> parse_workspace_path(std::string_view path);

// Authenticating reverse proxy keyed on /workspace/{project}/{user}/.
//
// Lookups read an immutable route-table snapshot. A request admitted on a
// route pins it; unregister_route() swaps the route out and then waits until
// every pinned request has finished, so a caller that releases the backend
// port afterwards can never have a stale request reach the port's next
// owner.
class IngressProxy {
 public:
  explicit IngressProxy(PortPool& ports,
                        std::chrono::milliseconds backend_timeout = std::chrono::seconds(10));
  ~IngressProxy();

  void register_route(RouteEntry entry);
  void unregister_route(const ProjectName& project, const UserId& user);
  std::optional<RouteEntry> lookup(const ProjectName& project, const UserId& user) const;
  std::size_t route_count() const;

  ProxyResponse resolve_and_forward(const ProxyRequest& request);

  PortPool& ports() noexcept { return ports_; }

 private:
  struct Slot;
  using Table = std::map<ProjectUser, std::shared_ptr<Slot>>;

  std::shared_ptr<const Table> snapshot() const;

  PortPool& ports_;
  std::chrono::milliseconds backend_timeout_;
  mutable std::mutex table_mutex_;     // guards the pointer swap only
  std::mutex mutation_mutex_;          // serializes register/unregister
  std::shared_ptr<const Table> table_;
};

}  // namespace workbench
