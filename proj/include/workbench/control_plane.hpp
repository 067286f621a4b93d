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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "workbench/backend.hpp"
#include "workbench/logs.hpp"
#include "workbench/projectfs.hpp"
#include "workbench/proxy.hpp"
#include "workbench/scheduler.hpp"
#include "workbench/spark.hpp"
#include "workbench/tenancy.hpp"
#include "workbench/token.hpp"
#include "workbench/workspace.hpp"

namespace workbench {

struct UserAccount {
  UserId user;
  std::string password;
  bool admin = false;
};

// Password-stub user directory handing out opaque "ust_" session tokens.
class UserDirectory {
 public:
  void add_user(UserAccount account);
  // Returns a new session token, or nullopt on bad credentials.
  std::optional<std::string> login(const UserId& user, const std::string& password);
  // Issues a session token without a password check (bootstrap and tests).
  std::string issue_session(const UserId& user);
  std::optional<UserId> authenticate(const std::string& token) const;
  bool is_admin(const UserId& user) const;

 private:
  mutable std::mutex mutex_;
  std::map<UserId, UserAccount> accounts_;
  std::map<std::string, UserId> sessions_;
};

struct ControlPlaneConfig {
  std::filesystem::path data_dir;  // empty: a fresh temporary directory
  Port nodeport_range_start = kNodePortRangeStart;
  Port nodeport_range_end = kNodePortRangeEnd;
  std::vector<NodeSpec> nodes;
  std::vector<UserAccount> users;
  SimDriverOptions driver;
  GatewayOptions gateway;
  WorkspaceManagerOptions workspaces;
  std::optional<std::chrono::milliseconds> log_max_age;
};

std::pair<Port, Port> parse_nodeport_range(std::string_view text);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string tls_cert;
  std::string tls_key;
  std::string console_dir;  // served under /console/ when set
};

// "host:port" or ":port".
void parse_listen(std::string_view text, ServerOptions& out);

// Reads the JSON configuration file; see README for the schema.
ControlPlaneConfig load_config(const std::filesystem::path& path);
ServerOptions load_server_options(const std::filesystem::path& path);

// Owns every component and wires them together. Members are public so
// tools and tests can drive modules directly.
class ControlPlane {
 public:
  explicit ControlPlane(ControlPlaneConfig config, std::unique_ptr<BackendDriver> driver = nullptr);
  ~ControlPlane();

  const ControlPlaneConfig& config() const noexcept { return config_; }

  // Creates the project in tenancy; its root appears in projectfs through
  // the tenancy listener.
  Project create_project(const ProjectName& name, const UserId& owner) { return tenancy.create_project(name, owner); }

 private:
  bool owns_data_dir_;
  ControlPlaneConfig config_;

 public:
  UserDirectory users;
  Tenancy tenancy;
  ProjectFs fs;
  Cluster cluster;
  PortPool ports;
  IngressProxy proxy;
  TokenRegistry tokens;
  LogAggregator logs;
  std::unique_ptr<BackendDriver> driver;
  SparkGateway gateway;
  WorkspaceManager workspaces;
};

// One HTTP(S) listener for the REST API (/api), the Livy-style gateway
// (/gateway), the authenticating proxy (/workspace) and the static console.
class ApiServer {
 public:
  ApiServer(ControlPlane& plane, ServerOptions options);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  int start();
  // Serves on the calling thread until stop().
  void run();
  void stop();
  int port() const noexcept { return bound_port_; }
  bool tls() const noexcept { return !options_.tls_cert.empty(); }

 private:
  struct Impl;
  ControlPlane& plane_;
  ServerOptions options_;
  std::unique_ptr<Impl> impl_;
  int bound_port_ = 0;
  std::thread thread_;
};

}  // namespace workbench
