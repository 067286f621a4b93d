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

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "workbench/types.hpp"

namespace workbench {

struct Reservation {
  InstanceId instance;
  Mebibytes mem;
  Millicores cpu;
  friend bool operator==(const Reservation&, const Reservation&) = default;
};

struct NodeSpec {
  NodeId id;
  Mebibytes capacity_mem;
  Millicores capacity_cpu;
  Mebibytes allocatable_mem;
  Millicores allocatable_cpu;
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

// System overhead withheld from each node unless configured otherwise.
inline constexpr Mebibytes kDefaultMemOverhead{8192};
inline constexpr Millicores kDefaultCpuOverhead{1000};

NodeSpec node_with_default_overhead(NodeId id, Mebibytes capacity_mem, Millicores capacity_cpu);

struct NodeState {
  NodeSpec spec;
  std::vector<Reservation> reservations;

  Mebibytes reserved_mem() const noexcept;
  Millicores reserved_cpu() const noexcept;
  Mebibytes free_mem() const noexcept { return spec.allocatable_mem - reserved_mem(); }
  Millicores free_cpu() const noexcept { return spec.allocatable_cpu - reserved_cpu(); }
  bool fits(const Reservation& r) const noexcept { return r.mem <= free_mem() && r.cpu <= free_cpu(); }
};

struct NodeAssignment {
  NodeId node;
  friend bool operator==(const NodeAssignment&, const NodeAssignment&) = default;
};

enum class ClusterEventKind { RegisterNode, Place, Release };

struct ClusterEvent {
  std::uint64_t seq = 0;
  ClusterEventKind kind{};
  NodeId node;
  InstanceId instance;
  Mebibytes mem;
  Millicores cpu;
};

// Node registry plus reservation admission. place() and release() are
// linearizable; every mutation is appended to an event log in the same
// critical section, so replaying the log reproduces every intermediate
// state.
class Cluster {
 public:
  Cluster() = default;
  explicit Cluster(const std::vector<NodeState>& nodes);

  NodeState register_node(const NodeSpec& spec);

  // Most free memory first; ties go to the lexicographically smallest id.
  NodeAssignment place(const Reservation& r);
  Reservation release(const InstanceId& instance);

  std::vector<NodeState> nodes() const;
  std::optional<NodeId> node_of(const InstanceId& instance) const;
  std::vector<ClusterEvent> event_log() const;

 private:
  void append_event(ClusterEventKind kind, const NodeId& node, const InstanceId& instance,
                    Mebibytes mem, Millicores cpu);

  mutable std::mutex mutex_;
  std::map<NodeId, NodeState> nodes_;
  std::map<InstanceId, NodeId> placements_;
  std::vector<ClusterEvent> events_;
};

struct CapacityPlan {
  std::int64_t servers = 0;
  std::int64_t required_ram_gb = 0;
  std::int64_t min_cpus = 0;
  friend bool operator==(const CapacityPlan&, const CapacityPlan&) = default;
};

// 3 GB and 0.8 CPU per concurrent workspace server.
CapacityPlan plan_capacity(std::int64_t servers);

struct FillReport {
  std::int64_t admitted = 0;
  std::int64_t rejected = 0;
  std::map<NodeId, std::int64_t> per_node;
};

// Attempts `attempts` placements of `per_server` against a private copy of
// `nodes` (existing reservations are kept). Pure.
FillReport simulate_fill(const std::vector<NodeState>& nodes, const Reservation& per_server,
                         std::int64_t attempts);

struct AuditViolation {
  std::uint64_t seq = 0;
  NodeId node;
  std::string what;
};

// Replays a cluster event log and reports every point at which a node's
// reservations exceed its allocatable amount or a release has no matching
// placement.
std::vector<AuditViolation> audit_event_log(const std::vector<ClusterEvent>& events);

}  // namespace workbench
