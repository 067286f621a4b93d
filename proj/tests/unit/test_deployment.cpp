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

#include <gtest/gtest.h>

#include <map>
#include <sstream>
#include <type_traits>

#include "temp_dir.hpp"
#include "workbench/deployment.hpp"

using namespace workbench;

namespace {

template <typename T>
concept HasMutableEntries = requires(T t) { t.entries().clear(); };

// A ConfigMap exposes no mutating access after construction.
static_assert(ConfigMap::immutable);
static_assert(!HasMutableEntries<ConfigMap>);
static_assert(!HasMutableEntries<Secret>);
static_assert(std::is_const_v<std::remove_reference_t<decltype(std::declval<ConfigMap&>().entries())>>);

DeploymentSpec demo_spec() {
  WorkspaceRequest req{"demo", "alice"};
  return render_deployment_spec(req, NodeAssignment{"n1"}, 30101, "wst_token");
}

// Independent check that every mapping in the emitted YAML lists its keys in
// ascending order. Tracks the previous key per indentation level.
bool keys_sorted(const std::string& yaml, std::string* why) {
  std::map<std::size_t, std::string> last;
  std::istringstream in(yaml);
  for (std::string line; std::getline(in, line);) {
    auto indent = line.find_first_not_of(' ');
    if (indent == std::string::npos) continue;
    bool item = line.compare(indent, 2, "- ") == 0;
    if (item) {
      indent += 2;
      last.erase(last.lower_bound(indent), last.end());
    }
    last.erase(last.upper_bound(indent), last.end());
    auto colon = line.find(':', indent);
    if (colon == std::string::npos || line[indent] == '"') continue;
    auto key = line.substr(indent, colon - indent);
    auto it = last.find(indent);
    if (it != last.end() && !(it->second < key)) {
      *why = "'" + key + "' after '" + it->second + "'";
      return false;
    }
    last[indent] = key;
  }
  return true;
}

}  // namespace

TEST(Naming, ContainerAndDeploymentNames) {
  EXPECT_EQ(container_name("demo", "alice"), "demo__alice_rstudio");
  EXPECT_EQ(deployment_name("demo", "alice"), "rstudio_demo_alice");
  EXPECT_EQ(package_lib_path_for("demo", "alice"), "/Projects/demo/DataSets/Rstudio/.Rpackages/demo__alice");
}

TEST(RenderDeployment, PaperExample) {
  auto spec = demo_spec();
  EXPECT_EQ(spec.name, "rstudio_demo_alice");
  EXPECT_EQ(spec.namespace_name, "demo");
  EXPECT_EQ(spec.replicas, 1);
  EXPECT_EQ(spec.node, "n1");
  EXPECT_EQ(spec.service.type, "NodePort");
  EXPECT_EQ(spec.service.node_port, 30101);
  EXPECT_EQ(spec.service.target_port, 8787);
  EXPECT_EQ(spec.memory_limit, Mebibytes{2048});
  EXPECT_EQ(spec.cpu_limit, Millicores{1000});
}

TEST(RenderDeployment, TwoContainers) {
  auto spec = demo_spec();
  ASSERT_EQ(spec.containers.size(), 2u);
  EXPECT_EQ(spec.containers[0].role, ContainerRole::workspace);
  EXPECT_EQ(spec.containers[1].role, ContainerRole::logcollector);
  EXPECT_EQ(spec.containers[0].env.at("R_LIBS_USER"), "/Projects/demo/DataSets/Rstudio/.Rpackages/demo__alice");
}

TEST(RenderDeployment, ConfigMapAndSecret) {
  auto spec = demo_spec();
  const auto& cm = spec.config_map.entries();
  ASSERT_TRUE(cm.count("config.yml"));
  EXPECT_NE(cm.at("config.yml").find("method: \"hopsworks\""), std::string::npos);
  EXPECT_NE(cm.at("rserver.conf").find("www-port=8787"), std::string::npos);
  EXPECT_EQ(spec.secret.entries().at("jwt_token"), "wst_token");
}

TEST(RenderDeployment, SparkConfigFlowsIntoConfigMap) {
  WorkspaceRequest req{"demo", "alice"};
  SparkSessionConfig spark;
  spark.num_executors = 7;
  req.spark = spark;
  auto spec = render_deployment_spec(req, NodeAssignment{"n1"}, 30101, "t");
  EXPECT_NE(spec.config_map.entries().at("config.yml").find("numExecutors: 7\n"), std::string::npos);
}

TEST(Yaml, DeterministicAndKeySorted) {
  auto a = to_yaml(demo_spec());
  auto b = to_yaml(demo_spec());
  EXPECT_EQ(a, b);
  std::string why;
  EXPECT_TRUE(keys_sorted(a, &why)) << why << "\n" << a;
  EXPECT_NE(a.find("name: \"rstudio_demo_alice\""), std::string::npos);
  EXPECT_NE(a.find("nodePort: 30101"), std::string::npos);
}

TEST(Yaml, SortCheckerCatchesDisorder) {
  std::string why;
  EXPECT_FALSE(keys_sorted("b: 1\na: 2\n", &why));
  EXPECT_TRUE(keys_sorted("a:\n  z: 1\nb:\n  a: 2\n", &why));
}

TEST(Yaml, DistinctInputsDistinctDocuments) {
  WorkspaceRequest req{"demo", "bob"};
  EXPECT_NE(to_yaml(render_deployment_spec(req, NodeAssignment{"n1"}, 30101, "t")), to_yaml(demo_spec()));
}
