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

#include "workbench/codec.hpp"

#include "workbench/error.hpp"

namespace workbench {

using nlohmann::json;

json to_json(const Project& p) {
  return {{"name", p.name},
          {"owner", p.owner},
          {"created_at", format_timestamp(p.created_at)},
          {"dataset_names", p.dataset_names}};
}

json to_json(const Membership& m) {
  return {{"project", m.project}, {"user", m.user}, {"role", to_string(m.role)}};
}

json to_json(const DatasetShare& s) {
  return {{"source_project", s.source_project},
          {"dataset", s.dataset},
          {"target_project", s.target_project},
          {"permission", to_string(s.permission)}};
}

json to_json(const NodeState& n) {
  return {{"id", n.spec.id},
          {"capacity_mem_mib", n.spec.capacity_mem.value()},
          {"capacity_millicores", n.spec.capacity_cpu.value()},
          {"allocatable_mem_mib", n.spec.allocatable_mem.value()},
          {"allocatable_millicores", n.spec.allocatable_cpu.value()},
          {"reserved_mem_mib", n.reserved_mem().value()},
          {"reserved_millicores", n.reserved_cpu().value()},
          {"reservations", n.reservations.size()}};
}

json to_json(const CapacityPlan& plan) {
  return {{"servers", plan.servers}, {"required_ram_gb", plan.required_ram_gb}, {"min_cpus", plan.min_cpus}};
}

json to_json(const FillReport& report) {
  return {{"admitted", report.admitted}, {"rejected", report.rejected}, {"per_node", report.per_node}};
}

json to_json(const LogEntry& e) {
  return {{"timestamp", format_timestamp(e.timestamp)},
          {"project", e.project},
          {"user", e.user},
          {"instance", e.instance},
          {"level", to_string(e.level)},
          {"message", e.message},
          {"seq", e.seq}};
}

json to_json(const Statement& st) {
  json j{{"id", st.id}, {"code", st.code}, {"state", to_string(st.state)}};
  j["output"] = st.output ? json(*st.output) : json(nullptr);
  return j;
}

json to_json(const SparkSessionConfig& cfg) {
  return {{"livy.url", cfg.livy_url},
          {"method", cfg.method},
          {"driverMemory", cfg.driver_memory},
          {"driverCores", cfg.driver_cores},
          {"executorMemory", cfg.executor_memory},
          {"executorCores", cfg.executor_cores},
          {"numExecutors", cfg.num_executors}};
}

json to_json(const Session& s) {
  json statements = json::array();
  for (const auto& st : s.statements) statements.push_back(to_json(st));
  return {{"id", s.id},
          {"project", s.owner.project},
          {"user", s.owner.user},
          {"state", to_string(s.state)},
          {"config", to_json(s.config)},
          {"statements", statements}};
}

json to_json(const WorkspaceInstance& w, bool include_token) {
  json j{{"id", w.id},
         {"project", w.project},
         {"user", w.user},
         {"state", to_string(w.state)},
         {"internal_port", w.internal_port},
         {"node_port", w.node_port},
         {"memory_limit_mib", w.memory_limit.value()},
         {"cpu_millicores", w.cpu_limit.value()},
         {"url", "/workspace/" + w.project + "/" + w.user + "/"}};
  j["node"] = w.node ? json(*w.node) : json(nullptr);
  j["failure_reason"] = w.failure_reason.empty() ? json(nullptr) : json(w.failure_reason);
  j["started_at"] = w.started_at ? json(format_timestamp(*w.started_at)) : json(nullptr);
  j["stopped_at"] = w.stopped_at ? json(format_timestamp(*w.stopped_at)) : json(nullptr);
  if (w.spec) j["deployment"] = w.spec->name;
  if (include_token && !w.token.empty()) j["token"] = w.token;
  return j;
}

SparkSessionConfig spark_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "spark config must be an object");
  SparkSessionConfig cfg;
  auto str = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_string()) throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be a string");
    out = j[key].get<std::string>();
  };
  auto count = [&](const char* key, std::int64_t& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be an integer");
    out = j[key].get<std::int64_t>();
  };
  str("livy.url", cfg.livy_url);
  if (j.contains("livyUrl")) str("livyUrl", cfg.livy_url);
  str("method", cfg.method);
  str("driverMemory", cfg.driver_memory);
  count("driverCores", cfg.driver_cores);
  str("executorMemory", cfg.executor_memory);
  count("executorCores", cfg.executor_cores);
  count("numExecutors", cfg.num_executors);
  return cfg;
}

}  // namespace workbench
