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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "workbench/scheduler.hpp"
#include "workbench/spark.hpp"
#include "workbench/types.hpp"

namespace workbench {

// Port the workspace server listens on inside its container.
inline constexpr Port kWorkspaceInternalPort = 8787;

inline constexpr Mebibytes kDefaultMemoryLimit{2048};
inline constexpr Millicores kDefaultCpuLimit{1000};

struct WorkspaceRequest {
  ProjectName project;
  UserId user;
  Mebibytes memory_limit = kDefaultMemoryLimit;
  Millicores cpu_limit = kDefaultCpuLimit;
  std::optional<SparkSessionConfig> spark;
};

enum class DeploymentMode { Docker, Kubernetes };

// Docker mode: "{project}__{user}_rstudio".
std::string container_name(std::string_view project, std::string_view user);
// Kubernetes mode: "rstudio_{project}_{user}".
std::string deployment_name(std::string_view project, std::string_view user);

// /Projects/{project}/DataSets/Rstudio/.Rpackages/{project}__{user}
std::string package_lib_path_for(std::string_view project, std::string_view user);

// Entries are fixed at construction; there is no way to change them.
class ConfigMap {
 public:
  explicit ConfigMap(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  static constexpr bool immutable = true;

 private:
  std::map<std::string, std::string> entries_;
};

class Secret {
 public:
  explicit Secret(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {}
  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

enum class ContainerRole { workspace, logcollector };

struct ContainerSpec {
  std::string name;
  ContainerRole role;
  std::string image;
  std::map<std::string, std::string> env;
};

struct ServiceSpec {
  std::string type = "NodePort";
  Port node_port = 0;
  Port target_port = kWorkspaceInternalPort;
};

struct DeploymentSpec {
  std::string namespace_name;
  std::string name;
  int replicas = 1;
  NodeId node;
  Mebibytes memory_limit;
  Millicores cpu_limit;
  std::vector<ContainerSpec> containers;
  ConfigMap config_map{{}};
  Secret secret{{}};
  ServiceSpec service;
};

inline constexpr std::string_view kDefaultLivyUrl = "http://livy.hopsworks:8998";

// Pure and deterministic. The ConfigMap carries "rserver.conf" and
// "config.yml"; the Secret carries "jwt_token".
DeploymentSpec render_deployment_spec(const WorkspaceRequest& req, const NodeAssignment& placement,
                                      Port node_port, const std::string& token);

// Canonical YAML: keys sorted, two-space indent, strings double-quoted.
std::string to_yaml(const DeploymentSpec& spec);

}  // namespace workbench
