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

// JSON shapes shared by the REST API and the CLI.

#include "json.hpp"
#include "workbench/logs.hpp"
#include "workbench/scheduler.hpp"
#include "workbench/spark.hpp"
#include "workbench/tenancy.hpp"
#include "workbench/workspace.hpp"

namespace workbench {

nlohmann::json to_json(const Project& p);
nlohmann::json to_json(const Membership& m);
nlohmann::json to_json(const DatasetShare& s);
nlohmann::json to_json(const NodeState& n);
nlohmann::json to_json(const CapacityPlan& plan);
nlohmann::json to_json(const FillReport& report);
nlohmann::json to_json(const LogEntry& e);
nlohmann::json to_json(const Statement& st);
nlohmann::json to_json(const Session& s);
nlohmann::json to_json(const SparkSessionConfig& cfg);
nlohmann::json to_json(const WorkspaceInstance& w, bool include_token);

// Missing keys keep their defaults; wrong types are InvalidArgument.
SparkSessionConfig spark_config_from_json(const nlohmann::json& j);

}  // namespace workbench
