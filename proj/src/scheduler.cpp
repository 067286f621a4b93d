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

#include "workbench/scheduler.hpp"

#include <algorithm>

#include "workbench/error.hpp"

namespace workbench {

NodeSpec node_with_default_overhead(NodeId id, Mebibytes capacity_mem, Millicores capacity_cpu) {
  return NodeSpec{std::move(id), capacity_mem, capacity_cpu,
                  std::max(Mebibytes{0}, capacity_mem - kDefaultMemOverhead),
                  std::max(Millicores{0}, capacity_cpu - kDefaultCpuOverhead)};
}

Mebibytes NodeState::reserved_mem() const noexcept {
  Mebibytes total{0};
  for (const auto& r : reservations) total += r.mem;
  return total;
}

Millicores NodeState::reserved_cpu() const noexcept {
  Millicores total{0};
  for (const auto& r : reservations) total += r.cpu;
  return total;
}

Cluster::Cluster(const std::vector<NodeState>& nodes) {
  for (const auto& n : nodes) {
    nodes_[n.spec.id] = n;
    append_event(ClusterEventKind::RegisterNode, n.spec.id, {}, n.spec.allocatable_mem,
                 n.spec.allocatable_cpu);
    for (const auto& r : n.reservations) {
      placements_[r.instance] = n.spec.id;
      append_event(ClusterEventKind::Place, n.spec.id, r.instance, r.mem, r.cpu);
    }
  }
}

void Cluster::append_event(ClusterEventKind kind, const NodeId& node, const InstanceId& instance,
                           Mebibytes mem, Millicores cpu) {
  events_.push_back(ClusterEvent{events_.size() + 1, kind, node, instance, mem, cpu});
}

NodeState Cluster::register_node(const NodeSpec& spec) {
  if (spec.id.empty()) throw Error(ErrorCode::InvalidArgument, "node id must not be empty");
  if (spec.allocatable_mem > spec.capacity_mem || spec.allocatable_cpu > spec.capacity_cpu ||
      spec.allocatable_mem < Mebibytes{0} || spec.allocatable_cpu < Millicores{0}) {
    throw Error(ErrorCode::InvalidAllocatable, "allocatable exceeds capacity on node " + spec.id);
  }
  std::lock_guard lock(mutex_);
  if (auto it = nodes_.find(spec.id); it != nodes_.end()) {
    if (it->second.spec == spec) return it->second;
    throw Error(ErrorCode::NodeConflict, "node " + spec.id + " already registered with a different shape");
  }
  auto& node = nodes_[spec.id];
  node.spec = spec;
  append_event(ClusterEventKind::RegisterNode, spec.id, {}, spec.allocatable_mem, spec.allocatable_cpu);
  return node;
}

NodeAssignment Cluster::place(const Reservation& r) {
  if (r.mem <= Mebibytes{0} || r.cpu <= Millicores{0}) {
    throw Error(ErrorCode::InvalidArgument, "reservation amounts must be positive");
  }
  std::lock_guard lock(mutex_);
  if (placements_.count(r.instance)) {
    throw Error(ErrorCode::InvalidArgument, "instance already holds a reservation: " + r.instance);
  }
  NodeState* best = nullptr;
  // std::map iterates in id order, so strict '>' keeps the smallest id on ties.
  for (auto& [id, node] : nodes_) {
    if (node.fits(r) && (!best || node.free_mem() > best->free_mem())) best = &node;
  }
  if (!best) throw Error(ErrorCode::InsufficientResources, "no node can fit the reservation");
  best->reservations.push_back(r);
  placements_[r.instance] = best->spec.id;
  append_event(ClusterEventKind::Place, best->spec.id, r.instance, r.mem, r.cpu);
  return NodeAssignment{best->spec.id};
}

Reservation Cluster::release(const InstanceId& instance) {
  std::lock_guard lock(mutex_);
  auto it = placements_.find(instance);
  if (it == placements_.end()) throw Error(ErrorCode::NoSuchReservation, "no reservation for " + instance);
  auto& node = nodes_.at(it->second);
  auto rit = std::find_if(node.reservations.begin(), node.reservations.end(),
                          [&](const Reservation& r) { return r.instance == instance; });
  Reservation released = *rit;
  node.reservations.erase(rit);
  append_event(ClusterEventKind::Release, node.spec.id, instance, released.mem, released.cpu);
  placements_.erase(it);
  return released;
}

std::vector<NodeState> Cluster::nodes() const {
  std::lock_guard lock(mutex_);
  std::vector<NodeState> out;
  out.reserve(nodes_.size());
  for (const auto& [id, node] : nodes_) out.push_back(node);
  return out;
}

std::optional<NodeId> Cluster::node_of(const InstanceId& instance) const {
  std::lock_guard lock(mutex_);
  auto it = placements_.find(instance);
  if (it == placements_.end()) return std::nullopt;
  return it->second;
}

std::vector<ClusterEvent> Cluster::event_log() const {
  std::lock_guard lock(mutex_);
  return events_;
}

CapacityPlan plan_capacity(std::int64_t servers) {
  if (servers < 0) throw Error(ErrorCode::InvalidArgument, "servers must be non-negative");
  // ceil(0.8 * n) in integer arithmetic.
  return CapacityPlan{servers, 3 * servers, (4 * servers + 4) / 5};
}

FillReport simulate_fill(const std::vector<NodeState>& nodes, const Reservation& per_server,
                         std::int64_t attempts) {
  if (attempts < 0) throw Error(ErrorCode::InvalidArgument, "attempts must be non-negative");
  Cluster cluster(nodes);
  FillReport report;
  for (const auto& n : nodes) report.per_node[n.spec.id] = 0;
  for (std::int64_t i = 0; i < attempts; ++i) {
    Reservation r = per_server;
    r.instance = "fill-" + std::to_string(i);
    try {
      auto assignment = cluster.place(r);
      ++report.admitted;
      ++report.per_node[assignment.node];
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientResources) throw;
      ++report.rejected;
    }
  }
  return report;
}

std::vector<AuditViolation> audit_event_log(const std::vector<ClusterEvent>& events) {
  struct Totals {
    Mebibytes alloc_mem, used_mem;
    Millicores alloc_cpu, used_cpu;
  };
  std::map<NodeId, Totals> totals;
  std::map<InstanceId, const ClusterEvent*> live;
  std::vector<AuditViolation> out;
  for (const auto& e : events) {
    switch (e.kind) {
      case ClusterEventKind::RegisterNode:
        totals[e.node] = Totals{e.mem, Mebibytes{0}, e.cpu, Millicores{0}};
        break;
      case ClusterEventKind::Place: {
        auto it = totals.find(e.node);
        if (it == totals.end()) {
          out.push_back({e.seq, e.node, "placement on unregistered node"});
          break;
        }
        it->second.used_mem += e.mem;
        it->second.used_cpu += e.cpu;
        live[e.instance] = &e;
        if (it->second.used_mem > it->second.alloc_mem) out.push_back({e.seq, e.node, "memory oversubscribed"});
        if (it->second.used_cpu > it->second.alloc_cpu) out.push_back({e.seq, e.node, "cpu oversubscribed"});
        break;
      }
      case ClusterEventKind::Release: {
        auto it = live.find(e.instance);
        if (it == live.end() || it->second->node != e.node) {
          out.push_back({e.seq, e.node, "release without placement"});
          break;
        }
        live.erase(it);
        totals[e.node].used_mem -= e.mem;
        totals[e.node].used_cpu -= e.cpu;
        break;
      }
    }
  }
  return out;
}

}  // namespace workbench
