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

#include "workbench/proxy.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "httplib.h"
#include "workbench/error.hpp"

namespace workbench {

namespace {

char lower(char c) noexcept { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool constant_time_equal(std::string_view a, std::string_view b) noexcept {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

// Header names listed in "Connection:" are hop-by-hop as well.
bool listed_in_connection(const Headers& headers, std::string_view name) {
  auto [first, last] = headers.equal_range("Connection");
  for (auto it = first; it != last; ++it) {
    std::string_view value = it->second;
    while (!value.empty()) {
      auto comma = value.find(',');
      if (iequals(trim(value.substr(0, comma)), name)) return true;
      if (comma == std::string_view::npos) break;
      value.remove_prefix(comma + 1);
    }
  }
  return false;
}

}  // namespace

bool CaseInsensitiveLess::operator()(std::string_view a, std::string_view b) const noexcept {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](char x, char y) { return lower(x) < lower(y); });
}

PortPool::PortPool(Port range_start, Port range_end) : range_start_(range_start), range_end_(range_end) {
  if (range_start > range_end) throw Error(ErrorCode::InvalidArgument, "empty node-port range");
  for (std::uint32_t p = range_start; p <= range_end; ++p) free_.insert(free_.end(), static_cast<Port>(p));
}

Port PortPool::allocate() {
  std::lock_guard lock(mutex_);
  if (free_.empty()) throw Error(ErrorCode::PoolExhausted, "node-port pool exhausted");
  auto port = *free_.begin();
  free_.erase(free_.begin());
  return port;
}

void PortPool::release(Port port) {
  if (!contains(port)) throw Error(ErrorCode::InvalidArgument, "port outside pool: " + std::to_string(port));
  std::lock_guard lock(mutex_);
  if (!free_.insert(port).second) {
    throw Error(ErrorCode::InvalidArgument, "port not allocated: " + std::to_string(port));
  }
}

bool PortPool::is_allocated(Port port) const {
  std::lock_guard lock(mutex_);
  return contains(port) && !free_.count(port);
}

std::size_t PortPool::allocated_count() const {
  std::lock_guard lock(mutex_);
  return capacity() - free_.size();
}

bool is_hop_by_hop_header(std::string_view name) noexcept {
  static constexpr std::array<std::string_view, 9> kHopByHop = {
      "Connection", "Keep-Alive", "Proxy-Authenticate", "Proxy-Authorization", "Proxy-Connection",
      "TE", "Trailer", "Transfer-Encoding", "Upgrade"};
  return std::any_of(kHopByHop.begin(), kHopByHop.end(), [&](std::string_view h) { return iequals(h, name); });
}

std::optional<std::string> extract_token(const Headers& headers) {
  if (auto it = headers.find("Authorization"); it != headers.end()) {
    std::string_view value = trim(it->second);
    if (value.size() > 7 && iequals(value.substr(0, 7), "Bearer ")) {
      auto token = trim(value.substr(7));
      if (!token.empty()) return std::string(token);
    }
  }
  auto [first, last] = headers.equal_range("Cookie");
  for (auto it = first; it != last; ++it) {
    std::string_view cookies = it->second;
    while (!cookies.empty()) {
      auto semi = cookies.find(';');
      auto pair = trim(cookies.substr(0, semi));
      auto eq = pair.find('=');
      if (eq != std::string_view::npos && pair.substr(0, eq) == kTokenCookie && eq + 1 < pair.size()) {
        return std::string(pair.substr(eq + 1));
      }
      if (semi == std::string_view::npos) break;
      cookies.remove_prefix(semi + 1);
    }
  }
  return std::nullopt;
}

std::optional<ParsedWorkspacePath> parse_workspace_path(std::string_view path) {
  constexpr std::string_view kPrefix = "/workspace/";
  if (path.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  path.remove_prefix(kPrefix.size());
  auto slash = path.find('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  ProjectName project(path.substr(0, slash));
  path.remove_prefix(slash + 1);
  slash = path.find('/');
  UserId user(path.substr(0, slash));
  if (user.empty()) return std::nullopt;
  std::string rest = slash == std::string_view::npos ? "/" : std::string(path.substr(slash));
  return ParsedWorkspacePath{std::move(project), std::move(user), std::move(rest)};
}

struct IngressProxy::Slot {
  RouteEntry entry;
  std::mutex mutex;
  std::condition_variable drained;
  int inflight = 0;
  bool closed = false;
};

IngressProxy::IngressProxy(PortPool& ports, std::chrono::milliseconds backend_timeout)
    : ports_(ports), backend_timeout_(backend_timeout), table_(std::make_shared<const Table>()) {}

IngressProxy::~IngressProxy() = default;

std::shared_ptr<const IngressProxy::Table> IngressProxy::snapshot() const {
  std::lock_guard lock(table_mutex_);
  return table_;
}

void IngressProxy::register_route(RouteEntry entry) {
  if (!ports_.contains(entry.backend_port)) {
    throw Error(ErrorCode::InvalidArgument, "backend port outside node-port range: " + std::to_string(entry.backend_port));
  }
  if (entry.token.empty()) throw Error(ErrorCode::InvalidArgument, "route token must not be empty");
  std::lock_guard mutation(mutation_mutex_);
  auto current = snapshot();
  ProjectUser key{entry.project, entry.user};
  if (current->count(key)) throw Error(ErrorCode::DuplicateRoute, "route exists for " + entry.project + "/" + entry.user);
  auto next = std::make_shared<Table>(*current);
  auto slot = std::make_shared<Slot>();
  if (entry.registered_at == Timestamp{}) entry.registered_at = now();
  slot->entry = std::move(entry);
  next->emplace(std::move(key), std::move(slot));
  std::lock_guard lock(table_mutex_);
  table_ = std::move(next);
}

void IngressProxy::unregister_route(const ProjectName& project, const UserId& user) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard mutation(mutation_mutex_);
    auto current = snapshot();
    auto it = current->find(ProjectUser{project, user});
    if (it == current->end()) throw Error(ErrorCode::UnknownRoute, "no route for " + project + "/" + user);
    slot = it->second;
    auto next = std::make_shared<Table>(*current);
    next->erase(it->first);
    std::lock_guard lock(table_mutex_);
    table_ = std::move(next);
  }
  std::unique_lock lock(slot->mutex);
  slot->closed = true;
  slot->drained.wait(lock, [&] { return slot->inflight == 0; });
}

std::optional<RouteEntry> IngressProxy::lookup(const ProjectName& project, const UserId& user) const {
  auto table = snapshot();
  auto it = table->find(ProjectUser{project, user});
  if (it == table->end()) return std::nullopt;
  return it->second->entry;
}

std::size_t IngressProxy::route_count() const { return snapshot()->size(); }

ProxyResponse IngressProxy::resolve_and_forward(const ProxyRequest& request) {
  auto parsed = parse_workspace_path(request.path);
  if (!parsed) throw Error(ErrorCode::UnknownRoute, "not a workspace path: " + request.path);
  auto token = extract_token(request.headers);
  if (!token) throw Error(ErrorCode::Unauthorized, "missing bearer token");

  auto table = snapshot();
  auto it = table->find(ProjectUser{parsed->project, parsed->user});
  if (it == table->end()) throw Error(ErrorCode::UnknownRoute, "no route for " + parsed->project + "/" + parsed->user);
  std::shared_ptr<Slot> slot = it->second;
  if (!constant_time_equal(*token, slot->entry.token)) {
    throw Error(ErrorCode::Unauthorized, "token not valid for " + parsed->project + "/" + parsed->user);
  }
  {
    std::lock_guard lock(slot->mutex);
    if (slot->closed) throw Error(ErrorCode::UnknownRoute, "route was removed");
    ++slot->inflight;
  }
  struct Unpin {
    Slot& s;
    ~Unpin() {
      std::lock_guard lock(s.mutex);
      if (--s.inflight == 0) s.drained.notify_all();
    }
  } unpin{*slot};

  httplib::Client client(slot->entry.backend_host, slot->entry.backend_port);
  auto seconds = std::chrono::duration_cast<std::chrono::seconds>(backend_timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(backend_timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), usecs.count());
  client.set_read_timeout(seconds.count(), usecs.count());
  client.set_write_timeout(seconds.count(), usecs.count());
  client.set_keep_alive(false);

  httplib::Request upstream;
  upstream.method = request.method;
  upstream.path = parsed->rest + (request.query.empty() ? "" : "?" + request.query);
  for (const auto& [name, value] : request.headers) {
    if (is_hop_by_hop_header(name) || listed_in_connection(request.headers, name) ||
        iequals(name, "Host") || iequals(name, "Content-Length")) {
      continue;
    }
    upstream.headers.emplace(name, value);
  }
  upstream.body = request.body;

  auto result = client.send(upstream);
  if (!result) {
    throw Error(ErrorCode::BackendUnreachable,
                "backend " + slot->entry.backend_host + ":" + std::to_string(slot->entry.backend_port) +
                    " unreachable: " + httplib::to_string(result.error()));
  }
  ProxyResponse response;
  response.status = result->status;
  Headers upstream_headers(result->headers.begin(), result->headers.end());
  for (const auto& [name, value] : upstream_headers) {
    if (is_hop_by_hop_header(name) || listed_in_connection(upstream_headers, name) ||
        iequals(name, "Content-Length")) {
      continue;
    }
    response.headers.emplace(name, value);
  }
  response.body = std::move(result->body);
  return response;
}

}  // namespace workbench
