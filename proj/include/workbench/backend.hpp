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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "workbench/logs.hpp"
#include "workbench/projectfs.hpp"
#include "workbench/types.hpp"

namespace workbench {

using BackendId = std::string;

struct BackendSpec {
  std::string name;
  Port listen_port = 0;
  Mebibytes memory_limit;
  Millicores cpu_limit;
  ProjectName project;
  UserId user;
  std::map<std::string, std::string> env;
  std::optional<MountView> mount;
  ProjectFs* filesystem = nullptr;  // serves `mount`; not owned
  std::map<std::string, std::string> config_files;  // ConfigMap volume
  std::map<std::string, std::string> secret_files;  // Secret volume
  std::shared_ptr<LogVolume> log_volume;
};

enum class BackendState { Running, Exited, OOMKilled };

struct BackendStatus {
  BackendState state = BackendState::Running;
  int exit_code = 0;
  friend bool operator==(const BackendStatus&, const BackendStatus&) = default;
};

std::string to_string(const BackendStatus& status);

struct BackendHandle {
  BackendId id;
  BackendSpec spec;
  BackendStatus status;
};

// Contract between the workspace manager and whatever runs workspaces.
//
//   operation         | success                          | errors
//   ------------------+----------------------------------+--------------------------
//   create_instance   | serving on spec.listen_port,     | NameInUse, PortInUse,
//                     | status Running                   | BackendError
//   destroy_instance  | stopped; Running -> Exited(0);   | NoSuchInstance (also on a
//                     | OOMKilled/Exited kept as is      | second destroy)
//   status            | current status                   | NoSuchInstance
//   list_instances    | every handle ever created,       | none
//                     | terminal ones included           |
//
// Names are unique among live instances only. Data reachable through
// spec.mount is never touched by destroy. Implementations must be safe to
// call from multiple threads.
class BackendDriver {
 public:
  virtual ~BackendDriver() = default;
  virtual BackendHandle create_instance(const BackendSpec& spec) = 0;
  virtual BackendHandle destroy_instance(const BackendId& id) = 0;
  virtual BackendStatus status(const BackendId& id) const = 0;
  virtual std::vector<BackendHandle> list_instances() const = 0;
};

struct RecordedRequest {
  std::string method;
  std::string path;
  std::string authorization;
};

struct SimDriverOptions {
  std::string bind_host = "127.0.0.1";
  std::chrono::milliseconds enforcement_interval{100};
  int worker_threads = 2;
};

// Runs each workspace as an in-process stub HTTP server:
//   GET  /health    -> 200 {"name","project","user"}
//   GET  /whoami    -> backend name
//   POST /allocate  -> {"bytes": N} adds N bytes of simulated memory
// A periodic sweep OOM-kills any instance whose simulated memory exceeds its
// limit (the limit itself is allowed). CPU limits are recorded only.
class SimDriver : public BackendDriver {
 public:
  explicit SimDriver(SimDriverOptions options = {});
  ~SimDriver() override;

  BackendHandle create_instance(const BackendSpec& spec) override;
  BackendHandle destroy_instance(const BackendId& id) override;
  BackendStatus status(const BackendId& id) const override;
  std::vector<BackendHandle> list_instances() const override;

  // Checks one instance right now instead of waiting for the sweep.
  BackendStatus enforce_limits(const BackendId& id);

  std::int64_t allocated_bytes(const BackendId& id) const;
  std::vector<RecordedRequest> received_requests(const BackendId& id) const;
  const SimDriverOptions& options() const noexcept { return options_; }

 private:
  struct Instance;
  void sweep_loop();
  void kill_locked(Instance& inst, BackendStatus status);

  SimDriverOptions options_;
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace workbench
