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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "workbench/backend.hpp"
#include "workbench/deployment.hpp"
#include "workbench/logs.hpp"
#include "workbench/projectfs.hpp"
#include "workbench/proxy.hpp"
#include "workbench/scheduler.hpp"
#include "workbench/tenancy.hpp"
#include "workbench/token.hpp"

namespace workbench {

enum class WorkspaceState { Requested, Scheduled, Starting, Running, Stopping, Stopped, Failed };

std::string_view to_string(WorkspaceState state) noexcept;
bool is_terminal(WorkspaceState state) noexcept;
// Requested -> Scheduled -> Starting -> Running -> Stopping -> Stopped, and
// any non-terminal state -> Failed.
bool is_legal_transition(WorkspaceState from, WorkspaceState to) noexcept;

struct WorkspaceInstance {
  InstanceId id;
  ProjectName project;
  UserId user;
  WorkspaceState state = WorkspaceState::Requested;
  std::string failure_reason;  // set iff state == Failed
  std::optional<NodeId> node;
  Port internal_port = kWorkspaceInternalPort;
  Port node_port = 0;
  std::string token;
  std::optional<DeploymentSpec> spec;
  BackendId backend;
  Mebibytes memory_limit;
  Millicores cpu_limit;
  std::optional<Timestamp> started_at;
  std::optional<Timestamp> stopped_at;
};

struct WorkspaceTransition {
  InstanceId instance;
  WorkspaceState from;
  WorkspaceState to;
};

// Orchestration steps of a start, in acquisition order. A fault hook may
// throw at any of them; everything acquired before is rolled back in
// reverse order.
enum class SagaStep { Schedule, AllocatePort, IssueToken, Mount, BackendCreate, StartLogShipper, RouteRegister };

struct WorkspaceManagerOptions {
  DeploymentMode mode = DeploymentMode::Kubernetes;
  std::string backend_host = "127.0.0.1";
  std::string livy_url = std::string(kDefaultLivyUrl);
  std::chrono::milliseconds log_ship_interval{50};
  // How often live backends are checked for OOM kills; zero disables the
  // background reconciler (workspace_status() still reconciles).
  std::chrono::milliseconds reconcile_interval{100};
  std::function<void(SagaStep)> fault_hook;
};

// Per-user workspace lifecycle. Admission (uniqueness check plus
// reservation) is one atomic step; the remaining start steps and the stop
// steps run per instance, so sagas for different (project, user) pairs
// proceed concurrently.
class WorkspaceManager {
 public:
  WorkspaceManager(Tenancy& tenancy, Cluster& cluster, IngressProxy& proxy, ProjectFs& fs,
                   BackendDriver& driver, LogAggregator& logs, TokenRegistry& tokens,
                   WorkspaceManagerOptions options = {});
  ~WorkspaceManager();
  WorkspaceManager(const WorkspaceManager&) = delete;
  WorkspaceManager& operator=(const WorkspaceManager&) = delete;

  WorkspaceInstance start_workspace(const WorkspaceRequest& req, const UserId& actor);
  WorkspaceInstance stop_workspace(const ProjectName& project, const UserId& user, const UserId& actor);
  WorkspaceInstance workspace_status(const ProjectName& project, const UserId& user);

  // Fresh token for a member; never reused across instance lifetimes.
  std::string issue_token(const ProjectName& project, const UserId& user) const;

  // Marks instances whose backend died (e.g. OOM-killed) as Failed and
  // releases what they held.
  void reconcile();

  std::vector<WorkspaceInstance> instances() const;
  std::vector<WorkspaceTransition> transitions() const;
  const WorkspaceManagerOptions& options() const noexcept { return options_; }

 private:
  struct Record;

  std::shared_ptr<Record> latest(const ProjectUser& key) const;
  void set_state(Record& r, WorkspaceState to, std::string reason = {});
  void set_state_locked(Record& r, WorkspaceState to, std::string reason = {});
  void teardown(Record& r);
  void fail(Record& r, const std::string& reason);
  void reconcile_loop();

  Tenancy& tenancy_;
  Cluster& cluster_;
  IngressProxy& proxy_;
  ProjectFs& fs_;
  BackendDriver& driver_;
  LogAggregator& logs_;
  TokenRegistry& tokens_;
  WorkspaceManagerOptions options_;

  mutable std::mutex mutex_;
  std::map<InstanceId, std::shared_ptr<Record>> records_;
  std::map<ProjectUser, InstanceId> latest_;
  std::vector<WorkspaceTransition> transitions_;
  std::uint64_t next_id_ = 1;

  std::mutex reconcile_mutex_;
  std::condition_variable reconcile_cv_;
  bool stopping_ = false;
  std::thread reconciler_;
};

}  // namespace workbench
