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

#include "workbench/deployment.hpp"

#include "json.hpp"
#include "workbench/projectfs.hpp"
#include "workbench/tenancy.hpp"

namespace workbench {

namespace {

using nlohmann::json;

constexpr std::string_view kWorkspaceImage = "workbench/rstudio:latest";
constexpr std::string_view kLogCollectorImage = "workbench/filebeat:latest";

void emit(std::string& out, const json& node, int indent);

std::string scalar(const json& v) {
  // A JSON string literal is also a valid double-quoted YAML scalar.
  return v.dump();
}

bool is_compound(const json& v) { return (v.is_object() || v.is_array()) && !v.empty(); }

void emit_value_after_key(std::string& out, const json& v, int indent) {
  if (is_compound(v)) {
    out += "\n";
    emit(out, v, v.is_array() ? indent : indent + 2);
  } else if (v.is_object()) {
    out += " {}\n";
  } else if (v.is_array()) {
    out += " []\n";
  } else {
    out += " " + scalar(v) + "\n";
  }
}

void emit(std::string& out, const json& node, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      out += pad + key + ":";
      emit_value_after_key(out, value, indent);
    }
  } else if (node.is_array()) {
    for (const auto& item : node) {
      if (item.is_object() && !item.empty()) {
        bool first = true;
        for (const auto& [key, value] : item.items()) {
          out += (first ? pad + "- " : pad + "  ") + key + ":";
          emit_value_after_key(out, value, indent + 2);
          first = false;
        }
      } else if (is_compound(item)) {
        out += pad + "-\n";
        emit(out, item, indent + 2);
      } else {
        out += pad + "- " + (item.is_object() ? std::string("{}") : item.is_array() ? std::string("[]") : scalar(item)) + "\n";
      }
    }
  }
}

}  // namespace

std::string container_name(std::string_view project, std::string_view user) {
  return scoped_name(project, user) + "_rstudio";
}

std::string deployment_name(std::string_view project, std::string_view user) {
  return "rstudio_" + std::string(project) + "_" + std::string(user);
}

std::string package_lib_path_for(std::string_view project, std::string_view user) {
  return dataset_root(project, kDefaultDataset) + "/.Rpackages/" + scoped_name(project, user);
}

DeploymentSpec render_deployment_spec(const WorkspaceRequest& req, const NodeAssignment& placement,
                                      Port node_port, const std::string& token) {
  SparkSessionConfig spark;
  spark.livy_url = std::string(kDefaultLivyUrl);
  if (req.spark) spark = *req.spark;

  DeploymentSpec spec;
  spec.namespace_name = req.project;
  spec.name = deployment_name(req.project, req.user);
  spec.replicas = 1;
  spec.node = placement.node;
  spec.memory_limit = req.memory_limit;
  spec.cpu_limit = req.cpu_limit;
  spec.containers.push_back(ContainerSpec{
      "rstudio", ContainerRole::workspace, std::string(kWorkspaceImage),
      {{"R_LIBS_USER", package_lib_path_for(req.project, req.user)},
       {"HOPSWORKS_PROJECT", req.project},
       {"HOPSWORKS_USER", scoped_name(req.project, req.user)}}});
  spec.containers.push_back(ContainerSpec{
      "filebeat", ContainerRole::logcollector, std::string(kLogCollectorImage),
      {{"LOG_PATH", "/var/log/rstudio"}}});
  spec.config_map = ConfigMap({
      {"rserver.conf", "www-port=" + std::to_string(kWorkspaceInternalPort) + "\nwww-address=0.0.0.0\n"},
      {"config.yml", render_config_yml(spark)},
  });
  spec.secret = Secret({{"jwt_token", token}});
  spec.service = ServiceSpec{"NodePort", node_port, kWorkspaceInternalPort};
  return spec;
}

std::string to_yaml(const DeploymentSpec& spec) {
  json containers = json::array();
  for (const auto& c : spec.containers) {
    containers.push_back({
        {"name", c.name},
        {"role", c.role == ContainerRole::workspace ? "workspace" : "logcollector"},
        {"image", c.image},
        {"env", c.env},
        {"resources", c.role == ContainerRole::workspace
                          ? json{{"limits", {{"memory", std::to_string(spec.memory_limit.value()) + "Mi"},
                                             {"cpu", std::to_string(spec.cpu_limit.value()) + "m"}}}}
                          : json::object()},
        {"ports", c.role == ContainerRole::workspace ? json::array({{{"containerPort", kWorkspaceInternalPort}}})
                                                     : json::array()},
        {"volumeMounts", json::array({{{"name", "config"}, {"mountPath", "/etc/rstudio"}},
                                      {{"name", "secret"}, {"mountPath", "/etc/workbench/secret"}},
                                      {{"name", "logs"}, {"mountPath", "/var/log/rstudio"}}})},
    });
  }
  json doc = {
      {"kind", "Deployment"},
      {"metadata", {{"name", spec.name}, {"namespace", spec.namespace_name}}},
      {"spec",
       {{"replicas", spec.replicas},
        {"template",
         {{"spec",
           {{"nodeName", spec.node},
            {"containers", containers},
            {"volumes", json::array({{{"name", "config"}, {"configMap", spec.name}},
                                     {{"name", "secret"}, {"secret", spec.name}},
                                     {{"name", "logs"}, {"emptyDir", json::object()}}})}}}}}}},
      {"configMap", {{"immutable", ConfigMap::immutable}, {"data", spec.config_map.entries()}}},
      {"secret", {{"stringData", spec.secret.entries()}}},
      {"service",
       {{"type", spec.service.type},
        {"ports", json::array({{{"nodePort", spec.service.node_port},
                                {"port", spec.service.target_port},
                                {"targetPort", spec.service.target_port}}})}}},
  };
  std::string out;
  emit(out, doc, 0);
  return out;
}

}  // namespace workbench
