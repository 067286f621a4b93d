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

#include "workbench/workspace.hpp"

#include <iostream>

#include "workbench/error.hpp"

namespace workbench {

std::string_view to_string(WorkspaceState state) noexcept {
  switch (state) {
    case WorkspaceState::Requested: return "Requested";
    case WorkspaceState::Scheduled: return "Scheduled";
    case WorkspaceState::Starting: return "Starting";
    case WorkspaceState::Running: return "Running";
    case WorkspaceState::Stopping: return "Stopping";
    case WorkspaceState::Stopped: return "Stopped";
    case WorkspaceState::Failed: return "Failed";
  }
  return "Failed";
}

bool is_terminal(WorkspaceState state) noexcept {
  return state == WorkspaceState::Stopped || state == WorkspaceState::Failed;
}

bool is_legal_transition(WorkspaceState from, WorkspaceState to) noexcept {
  using S = WorkspaceState;
  if (is_terminal(from)) return false;
  if (to == S::Failed) return true;
  return (from == S::Requested && to == S::Scheduled) || (from == S::Scheduled && to == S::Starting) ||
         (from == S::Starting && to == S::Running) || (from == S::Running && to == S::Stopping) ||
         (from == S::Stopping && to == S::Stopped);
}

struct WorkspaceManager::Record {
  std::mutex op_mutex;  // held for the whole of a start or stop saga
  WorkspaceInstance instance;  // guarded by WorkspaceManager::mutex_

  // Resources currently held; guarded by op_mutex.
  bool has_reservation = false;
  std::optional<Port> port;
  std::string token;
  std::optional<BackendId> backend;
  std::unique_ptr<LogShipper> shipper;
  bool has_route = false;
};

WorkspaceManager::WorkspaceManager(Tenancy& tenancy, Cluster& cluster, IngressProxy& proxy, ProjectFs& fs,
                                   BackendDriver& driver, LogAggregator& logs, TokenRegistry& tokens,
                                   WorkspaceManagerOptions options)
    : tenancy_(tenancy),
      cluster_(cluster),
      proxy_(proxy),
      fs_(fs),
      driver_(driver),
      logs_(logs),
      tokens_(tokens),
      options_(std::move(options)) {
  if (options_.reconcile_interval.count() > 0) {
    reconciler_ = std::thread([this] { reconcile_loop(); });
  }
}

WorkspaceManager::~WorkspaceManager() {
  {
    std::lock_guard lock(reconcile_mutex_);
    stopping_ = true;
  }
  reconcile_cv_.notify_all();
  if (reconciler_.joinable()) reconciler_.join();
}

void WorkspaceManager::reconcile_loop() {
  std::unique_lock lock(reconcile_mutex_);
  while (!stopping_) {
    reconcile_cv_.wait_for(lock, options_.reconcile_interval, [this] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    reconcile();
    lock.lock();
  }
}

std::shared_ptr<WorkspaceManager::Record> WorkspaceManager::latest(const ProjectUser& key) const {
  std::lock_guard lock(mutex_);
  auto it = latest_.find(key);
  if (it == latest_.end()) return nullptr;
  return records_.at(it->second);
}

void WorkspaceManager::set_state_locked(Record& r, WorkspaceState to, std::string reason) {
  transitions_.push_back({r.instance.id, r.instance.state, to});
  r.instance.state = to;
  r.instance.failure_reason = to == WorkspaceState::Failed ? std::move(reason) : std::string();
}

void WorkspaceManager::set_state(Record& r, WorkspaceState to, std::string reason) {
  std::lock_guard lock(mutex_);
  set_state_locked(r, to, std::move(reason));
}

std::string WorkspaceManager::issue_token(const ProjectName& project, const UserId& user) const {
  if (!tenancy_.role_of(project, user)) throw Error(ErrorCode::NotAMember, user + " is not a member of " + project);
  return generate_workspace_token();
}

// Releases everything the record holds, newest first. Individual failures
// are reported and skipped so that later resources are still released.
void WorkspaceManager::teardown(Record& r) {
  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      std::cerr << "workspace " << r.instance.id << ": " << what << " failed during teardown: " << e.what() << '\n';
    }
  };
  if (r.has_route) {
    attempt("route unregister", [&] { proxy_.unregister_route(r.instance.project, r.instance.user); });
    r.has_route = false;
  }
  if (r.shipper) {
    attempt("log shipper stop", [&] { r.shipper->stop(); });
    r.shipper.reset();
  }
  if (r.backend) {
    attempt("backend destroy", [&] { driver_.destroy_instance(*r.backend); });
    r.backend.reset();
  }
  if (r.port) {
    attempt("port release", [&] { proxy_.ports().release(*r.port); });
    r.port.reset();
  }
  if (!r.token.empty()) {
    tokens_.revoke(r.token);
    r.token.clear();
  }
  if (r.has_reservation) {
    attempt("reservation release", [&] { cluster_.release(r.instance.id); });
    r.has_reservation = false;
  }
}

void WorkspaceManager::fail(Record& r, const std::string& reason) {
  teardown(r);
  std::lock_guard lock(mutex_);
  set_state_locked(r, WorkspaceState::Failed, reason);
  r.instance.token.clear();
}

WorkspaceInstance WorkspaceManager::start_workspace(const WorkspaceRequest& request, const UserId& actor) {
  WorkspaceRequest req = request;
  if (req.memory_limit <= Mebibytes{0} || req.cpu_limit <= Millicores{0}) {
    throw Error(ErrorCode::InvalidArgument, "memory_limit and cpu_limit must be positive");
  }
  if (!tenancy_.project_exists(req.project)) throw Error(ErrorCode::NoSuchProject, "no such project: " + req.project);
  auto actor_role = tenancy_.role_of(req.project, actor);
  if (decide(actor_role, Action::StartWorkspace) == Decision::Deny) {
    throw Error(ErrorCode::Forbidden, actor + " may not start workspaces in " + req.project);
  }
  if (actor != req.user && actor_role != Role::DataOwner) {
    throw Error(ErrorCode::Forbidden, actor + " may not start a workspace for " + req.user);
  }
  if (!tenancy_.role_of(req.project, req.user)) {
    throw Error(ErrorCode::Forbidden, req.user + " is not a member of " + req.project);
  }
  if (!req.spark) {
    req.spark = SparkSessionConfig{};
    req.spark->livy_url = options_.livy_url;
  } else if (req.spark->livy_url.empty()) {
    req.spark->livy_url = options_.livy_url;
  }
  validate(*req.spark);

  const ProjectUser key{req.project, req.user};
  auto step = [this](SagaStep s) {
    if (options_.fault_hook) options_.fault_hook(s);
  };

  std::shared_ptr<Record> rec;
  std::unique_lock<std::mutex> op;
  {
    std::lock_guard lock(mutex_);
    if (auto it = latest_.find(key); it != latest_.end() && !is_terminal(records_.at(it->second)->instance.state)) {
      throw Error(ErrorCode::AlreadyRunning, "workspace already live for " + req.project + "/" + req.user);
    }
    rec = std::make_shared<Record>();
    op = std::unique_lock(rec->op_mutex);
    auto& inst = rec->instance;
    inst.id = "ws-" + std::to_string(next_id_++);
    inst.project = req.project;
    inst.user = req.user;
    inst.memory_limit = req.memory_limit;
    inst.cpu_limit = req.cpu_limit;
    records_[inst.id] = rec;
    latest_[key] = inst.id;
    try {
      step(SagaStep::Schedule);
      auto assignment = cluster_.place(Reservation{inst.id, req.memory_limit, req.cpu_limit});
      rec->has_reservation = true;
      inst.node = assignment.node;
    } catch (const std::exception& e) {
      set_state_locked(*rec, WorkspaceState::Failed, e.what());
      throw;
    }
    set_state_locked(*rec, WorkspaceState::Scheduled);
  }

  const auto& id = rec->instance.id;
  try {
    step(SagaStep::AllocatePort);
    rec->port = proxy_.ports().allocate();

    step(SagaStep::IssueToken);
    auto token = issue_token(req.project, req.user);
    tokens_.bind(token, TokenBinding{req.project, req.user, id});
    rec->token = token;

    step(SagaStep::Mount);
    auto view = fs_.mount_view(req.project, req.user);
    auto packages = fs_.package_lib_path(view);

    auto spec = render_deployment_spec(req, NodeAssignment{*rec->instance.node}, *rec->port, token);
    {
      std::lock_guard lock(mutex_);
      rec->instance.node_port = *rec->port;
      rec->instance.token = token;
      rec->instance.spec = spec;
      set_state_locked(*rec, WorkspaceState::Starting);
    }

    auto volume = std::make_shared<LogVolume>();
    logs_.register_instance(id, req.project, req.user);

    step(SagaStep::BackendCreate);
    BackendSpec backend;
    backend.name = options_.mode == DeploymentMode::Docker ? container_name(req.project, req.user) : spec.name;
    backend.listen_port = *rec->port;
    backend.memory_limit = req.memory_limit;
    backend.cpu_limit = req.cpu_limit;
    backend.project = req.project;
    backend.user = req.user;
    backend.env = spec.containers.front().env;
    backend.env["R_LIBS_USER"] = packages;
    backend.mount = view;
    backend.filesystem = &fs_;
    backend.config_files = spec.config_map.entries();
    backend.secret_files = spec.secret.entries();
    backend.log_volume = volume;
    try {
      rec->backend = driver_.create_instance(backend).id;
    } catch (const Error& e) {
      throw Error(ErrorCode::BackendError, std::string("backend create failed: ") + e.what());
    }
    {
      std::lock_guard lock(mutex_);
      rec->instance.backend = *rec->backend;
    }

    step(SagaStep::StartLogShipper);
    rec->shipper = std::make_unique<LogShipper>(logs_, id, volume, options_.log_ship_interval);

    step(SagaStep::RouteRegister);
    proxy_.register_route(RouteEntry{req.project, req.user, options_.backend_host, *rec->port, token, now()});
    rec->has_route = true;

    std::lock_guard lock(mutex_);
    rec->instance.started_at = now();
    set_state_locked(*rec, WorkspaceState::Running);
    return rec->instance;
  } catch (const std::exception& e) {
    fail(*rec, e.what());
    throw;
  }
}

WorkspaceInstance WorkspaceManager::stop_workspace(const ProjectName& project, const UserId& user,
                                                   const UserId& actor) {
  auto actor_role = tenancy_.role_of(project, actor);
  if (decide(actor_role, Action::StopWorkspace) == Decision::Deny ||
      (actor != user && actor_role != Role::DataOwner)) {
    throw Error(ErrorCode::Forbidden, actor + " may not stop the workspace of " + project + "/" + user);
  }
  auto rec = latest(ProjectUser{project, user});
  if (!rec) throw Error(ErrorCode::NoSuchInstance, "no workspace for " + project + "/" + user);

  std::lock_guard op(rec->op_mutex);
  WorkspaceState state;
  {
    std::lock_guard lock(mutex_);
    state = rec->instance.state;
    if (state == WorkspaceState::Failed) {
      // Resources were released when it failed; record when it was stopped.
      if (!rec->instance.stopped_at) rec->instance.stopped_at = now();
      return rec->instance;
    }
    if (state != WorkspaceState::Running && state != WorkspaceState::Starting) {
      throw Error(ErrorCode::NoSuchInstance, "no live workspace for " + project + "/" + user);
    }
    if (state == WorkspaceState::Starting) {
      // A Starting record outside a saga only exists if the start saga died
      // mid-way; Starting -> Stopping is not a legal edge.
      set_state_locked(*rec, WorkspaceState::Failed, "stopped while starting");
    } else {
      set_state_locked(*rec, WorkspaceState::Stopping);
    }
  }
  teardown(*rec);
  std::lock_guard lock(mutex_);
  if (rec->instance.state == WorkspaceState::Stopping) set_state_locked(*rec, WorkspaceState::Stopped);
  rec->instance.stopped_at = now();
  rec->instance.token.clear();
  return rec->instance;
}

WorkspaceInstance WorkspaceManager::workspace_status(const ProjectName& project, const UserId& user) {
  auto rec = latest(ProjectUser{project, user});
  if (!rec) throw Error(ErrorCode::NoSuchInstance, "no workspace for " + project + "/" + user);
  std::unique_lock op(rec->op_mutex, std::try_to_lock);
  if (op.owns_lock() && rec->backend) {
    bool running;
    {
      std::lock_guard lock(mutex_);
      running = rec->instance.state == WorkspaceState::Running;
    }
    if (running) {
      auto status = driver_.status(*rec->backend);
      if (status.state != BackendState::Running) fail(*rec, "backend " + to_string(status));
    }
  }
  std::lock_guard lock(mutex_);
  return rec->instance;
}

void WorkspaceManager::reconcile() {
  std::vector<std::shared_ptr<Record>> running;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, rec] : records_) {
      if (rec->instance.state == WorkspaceState::Running) running.push_back(rec);
    }
  }
  for (auto& rec : running) {
    std::unique_lock op(rec->op_mutex, std::try_to_lock);
    if (!op.owns_lock() || !rec->backend) continue;
    {
      std::lock_guard lock(mutex_);
      if (rec->instance.state != WorkspaceState::Running) continue;
    }
    try {
      auto status = driver_.status(*rec->backend);
      if (status.state != BackendState::Running) fail(*rec, "backend " + to_string(status));
    } catch (const std::exception& e) {
      fail(*rec, e.what());
    }
  }
}

std::vector<WorkspaceInstance> WorkspaceManager::instances() const {
  std::lock_guard lock(mutex_);
  std::vector<WorkspaceInstance> out;
  for (const auto& [id, rec] : records_) out.push_back(rec->instance);
  return out;
}

std::vector<WorkspaceTransition> WorkspaceManager::transitions() const {
  std::lock_guard lock(mutex_);
  return transitions_;
}

}  // namespace workbench
