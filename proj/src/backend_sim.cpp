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

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "workbench/backend.hpp"
#include "workbench/error.hpp"

namespace workbench {

std::string to_string(const BackendStatus& status) {
  switch (status.state) {
    case BackendState::Running: return "Running";
    case BackendState::Exited: return "Exited(" + std::to_string(status.exit_code) + ")";
    case BackendState::OOMKilled: return "OOMKilled";
  }
  return "Unknown";
}

namespace {

constexpr std::int64_t kBytesPerMebibyte = 1024 * 1024;

// SO_REUSEPORT would let two stubs bind one port; plain SO_REUSEADDR keeps
// PortInUse detectable while allowing quick rebinding after teardown.
void reuse_addr_only(socket_t sock) {
  int yes = 1;
  setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
}

void emit(const std::shared_ptr<LogVolume>& volume, LogLevel level, std::string_view message) {
  if (volume) volume->append(format_log_line(now(), level, message));
}

}  // namespace

struct SimDriver::Instance {
  BackendHandle handle;
  bool destroyed = false;
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
  std::atomic<std::int64_t> allocated{0};
  mutable std::mutex requests_mutex;
  std::vector<RecordedRequest> requests;

  void stop_server() {
    if (server) server->stop();
    if (thread.joinable()) thread.join();
  }
};

struct SimDriver::State {
  mutable std::mutex mutex;
  std::map<BackendId, std::unique_ptr<Instance>> instances;
  std::uint64_t next_id = 1;
  std::condition_variable sweep_cv;
  bool stopping = false;
  std::thread sweeper;
};

SimDriver::SimDriver(SimDriverOptions options)
    : options_(std::move(options)), state_(std::make_unique<State>()) {
  state_->sweeper = std::thread([this] { sweep_loop(); });
}

SimDriver::~SimDriver() {
  {
    std::lock_guard lock(state_->mutex);
    state_->stopping = true;
  }
  state_->sweep_cv.notify_all();
  state_->sweeper.join();
  std::lock_guard lock(state_->mutex);
  for (auto& [id, inst] : state_->instances) inst->stop_server();
}

void SimDriver::sweep_loop() {
  std::unique_lock lock(state_->mutex);
  while (!state_->stopping) {
    state_->sweep_cv.wait_for(lock, options_.enforcement_interval, [this] { return state_->stopping; });
    if (state_->stopping) break;
    for (auto& [id, inst] : state_->instances) {
      const auto limit = inst->handle.spec.memory_limit.value() * kBytesPerMebibyte;
      if (inst->handle.status.state == BackendState::Running && inst->allocated.load() > limit) {
        kill_locked(*inst, BackendStatus{BackendState::OOMKilled, 137});
      }
    }
  }
}

void SimDriver::kill_locked(Instance& inst, BackendStatus status) {
  if (status.state == BackendState::OOMKilled) {
    emit(inst.handle.spec.log_volume, LogLevel::ERROR,
         "OOMKilled: " + std::to_string(inst.allocated.load()) + " bytes exceeds limit of " +
             std::to_string(inst.handle.spec.memory_limit.value()) + " MiB");
  }
  inst.stop_server();
  inst.handle.status = status;
  if (status.state == BackendState::Exited) {
    emit(inst.handle.spec.log_volume, LogLevel::INFO, "workspace server " + inst.handle.spec.name + " exited");
  }
}

namespace {

template <typename F>
void mount_call(const BackendSpec& spec, httplib::Response& res, F&& f) {
  if (!spec.filesystem || !spec.mount) {
    res.status = 404;
    res.set_content(R"({"error":"NotFound","message":"no project mount"})", "application/json");
    return;
  }
  try {
    f(*spec.filesystem, *spec.mount);
  } catch (const Error& e) {
    res.status = http_status(e.code());
    res.set_content(nlohmann::json{{"error", to_string(e.code())}, {"message", e.what()}}.dump(), "application/json");
  }
}

}  // namespace

BackendHandle SimDriver::create_instance(const BackendSpec& spec) {
  if (spec.name.empty()) throw Error(ErrorCode::InvalidArgument, "backend name must not be empty");
  if (spec.memory_limit <= Mebibytes{0} || spec.cpu_limit <= Millicores{0}) {
    throw Error(ErrorCode::InvalidArgument, "limits must be positive");
  }
  std::lock_guard lock(state_->mutex);
  for (const auto& [id, inst] : state_->instances) {
    if (inst->handle.status.state != BackendState::Running) continue;
    if (inst->handle.spec.name == spec.name) throw Error(ErrorCode::NameInUse, "backend name in use: " + spec.name);
    if (inst->handle.spec.listen_port == spec.listen_port) {
      throw Error(ErrorCode::PortInUse, "port in use: " + std::to_string(spec.listen_port));
    }
  }

  auto inst = std::make_unique<Instance>();
  inst->handle = BackendHandle{"be-" + std::to_string(state_->next_id++), spec, BackendStatus{}};
  auto* raw = inst.get();
  auto server = std::make_unique<httplib::Server>();
  const int threads = std::max(1, options_.worker_threads);
  server->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  server->set_socket_options(reuse_addr_only);
  server->set_keep_alive_timeout(1);
  server->set_pre_routing_handler([raw](const httplib::Request& req, httplib::Response&) {
    {
      std::lock_guard lock(raw->requests_mutex);
      raw->requests.push_back({req.method, req.path, req.get_header_value("Authorization")});
    }
    emit(raw->handle.spec.log_volume, LogLevel::INFO, req.method + " " + req.path);
    return httplib::Server::HandlerResponse::Unhandled;
  });
  server->Get("/health", [raw](const httplib::Request&, httplib::Response& res) {
    const auto& s = raw->handle.spec;
    nlohmann::json body{{"name", s.name}, {"project", s.project}, {"user", s.user}};
    res.set_content(body.dump(), "application/json");
  });
  server->Get("/whoami", [raw](const httplib::Request&, httplib::Response& res) {
    res.set_content(raw->handle.spec.name, "text/plain");
  });
  server->Post("/allocate", [raw](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("bytes") || !body["bytes"].is_number_integer() ||
        body["bytes"].get<std::int64_t>() < 0) {
      res.status = 400;
      res.set_content(R"({"error":"expected {\"bytes\": <non-negative integer>}"})", "application/json");
      return;
    }
    auto total = raw->allocated.fetch_add(body["bytes"].get<std::int64_t>()) + body["bytes"].get<std::int64_t>();
    res.set_content(nlohmann::json{{"allocated", total}}.dump(), "application/json");
  });

  // File access through the project mount, relative to the project root.
  server->Get("/files/(.*)", [raw](const httplib::Request& req, httplib::Response& res) {
    mount_call(raw->handle.spec, res, [&](ProjectFs& fs, const MountView& view) {
      res.set_content(fs.read(view, req.matches[1].str()), "application/octet-stream");
    });
  });
  server->Put("/files/(.*)", [raw](const httplib::Request& req, httplib::Response& res) {
    mount_call(raw->handle.spec, res, [&](ProjectFs& fs, const MountView& view) {
      fs.write(view, req.matches[1].str(), req.body);
      res.status = 204;
    });
  });

  if (!server->bind_to_port(options_.bind_host, spec.listen_port)) {
    throw Error(ErrorCode::PortInUse, "cannot bind " + options_.bind_host + ":" + std::to_string(spec.listen_port));
  }
  inst->server = std::move(server);
  inst->thread = std::thread([raw] { raw->server->listen_after_bind(); });
  raw->server->wait_until_ready();
  emit(spec.log_volume, LogLevel::INFO,
       "workspace server " + spec.name + " listening on port " + std::to_string(spec.listen_port));

  auto handle = inst->handle;
  state_->instances.emplace(handle.id, std::move(inst));
  return handle;
}

BackendHandle SimDriver::destroy_instance(const BackendId& id) {
  std::lock_guard lock(state_->mutex);
  auto it = state_->instances.find(id);
  if (it == state_->instances.end() || it->second->destroyed) {
    throw Error(ErrorCode::NoSuchInstance, "no such backend: " + id);
  }
  auto& inst = *it->second;
  if (inst.handle.status.state == BackendState::Running) kill_locked(inst, BackendStatus{BackendState::Exited, 0});
  inst.destroyed = true;
  return inst.handle;
}

BackendStatus SimDriver::status(const BackendId& id) const {
  std::lock_guard lock(state_->mutex);
  auto it = state_->instances.find(id);
  if (it == state_->instances.end()) throw Error(ErrorCode::NoSuchInstance, "no such backend: " + id);
  return it->second->handle.status;
}

std::vector<BackendHandle> SimDriver::list_instances() const {
  std::lock_guard lock(state_->mutex);
  std::vector<BackendHandle> out;
  for (const auto& [id, inst] : state_->instances) out.push_back(inst->handle);
  return out;
}

BackendStatus SimDriver::enforce_limits(const BackendId& id) {
  std::lock_guard lock(state_->mutex);
  auto it = state_->instances.find(id);
  if (it == state_->instances.end()) throw Error(ErrorCode::NoSuchInstance, "no such backend: " + id);
  auto& inst = *it->second;
  const auto limit = inst.handle.spec.memory_limit.value() * kBytesPerMebibyte;
  if (inst.handle.status.state == BackendState::Running && inst.allocated.load() > limit) {
    kill_locked(inst, BackendStatus{BackendState::OOMKilled, 137});
  }
  return inst.handle.status;
}

std::int64_t SimDriver::allocated_bytes(const BackendId& id) const {
  std::lock_guard lock(state_->mutex);
  auto it = state_->instances.find(id);
  if (it == state_->instances.end()) throw Error(ErrorCode::NoSuchInstance, "no such backend: " + id);
  return it->second->allocated.load();
}

std::vector<RecordedRequest> SimDriver::received_requests(const BackendId& id) const {
  std::lock_guard lock(state_->mutex);
  auto it = state_->instances.find(id);
  if (it == state_->instances.end()) throw Error(ErrorCode::NoSuchInstance, "no such backend: " + id);
  std::lock_guard req_lock(it->second->requests_mutex);
  return it->second->requests;
}

}  // namespace workbench
