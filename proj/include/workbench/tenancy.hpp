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
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "workbench/types.hpp"

namespace workbench {

enum class Role { DataOwner, DataScientist };

enum class Action {
  StartWorkspace,
  StopWorkspace,
  ReadData,
  WriteData,
  QueryLogs,
  AddMember,
  CreateDataset,
  DeleteDataset,
  ShareDataset,
  RevokeShare,
};

enum class Decision { Allow, Deny };

enum class Permission { ReadOnly, ReadWrite };

std::string_view to_string(Role role) noexcept;
std::string_view to_string(Permission permission) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;
std::optional<Permission> parse_permission(std::string_view text) noexcept;

// Projects always carry the default "Rstudio" dataset; per-user package
// libraries live below it.
inline constexpr std::string_view kDefaultDataset = "Rstudio";

struct Project {
  ProjectName name;
  UserId owner;
  Timestamp created_at;
  std::set<DatasetName> dataset_names;
};

struct Membership {
  ProjectName project;
  UserId user;
  Role role;
  friend bool operator==(const Membership&, const Membership&) = default;
};

struct DatasetShare {
  ProjectName source_project;
  DatasetName dataset;
  ProjectName target_project;
  Permission permission;
  friend bool operator==(const DatasetShare&, const DatasetShare&) = default;
};

struct ProjectScopedIdentity {
  ProjectName project;
  UserId user;
  std::string scoped_name;
  friend bool operator==(const ProjectScopedIdentity&, const ProjectScopedIdentity&) = default;
};

// "{project}__{user}".
std::string scoped_name(std::string_view project, std::string_view user);

// Pure role/action matrix. Non-members are represented by std::nullopt.
Decision decide(std::optional<Role> role, Action action) noexcept;

// Notified after the corresponding mutation commits, outside the state lock.
class TenancyListener {
 public:
  virtual ~TenancyListener() = default;
  virtual void on_project_created(const ProjectName& /*project*/) {}
  virtual void on_dataset_created(const ProjectName& /*project*/, const DatasetName& /*dataset*/) {}
  virtual void on_dataset_deleted(const ProjectName& /*project*/, const DatasetName& /*dataset*/) {}
};

// Projects, memberships and dataset shares. Mutations are serialized; reads
// take a shared lock and observe a consistent snapshot.
class Tenancy {
 public:
  Tenancy() = default;
  Tenancy(const Tenancy&) = delete;
  Tenancy& operator=(const Tenancy&) = delete;

  void add_listener(TenancyListener* listener);

  Project create_project(const ProjectName& name, const UserId& owner);
  Membership add_member(const ProjectName& project, const UserId& user, Role role,
                        const UserId& actor);
  Decision authorize(const UserId& user, const ProjectName& project, Action action) const;

  void create_dataset(const ProjectName& project, const DatasetName& dataset, const UserId& actor);
  // Drops the dataset and every share of it.
  void delete_dataset(const ProjectName& project, const DatasetName& dataset, const UserId& actor);

  DatasetShare share_dataset(const ProjectName& source, const DatasetName& dataset,
                             const ProjectName& target, Permission permission,
                             const UserId& actor);
  void revoke_share(const ProjectName& source, const DatasetName& dataset,
                    const ProjectName& target, const UserId& actor);

  ProjectScopedIdentity scoped_identity(const ProjectName& project, const UserId& user) const;

  bool project_exists(const ProjectName& project) const;
  std::optional<Project> project(const ProjectName& project) const;
  std::optional<Role> role_of(const ProjectName& project, const UserId& user) const;
  std::vector<Membership> members(const ProjectName& project) const;
  std::vector<DatasetShare> shares_into(const ProjectName& target) const;
  std::vector<DatasetShare> shares_of(const ProjectName& source, const DatasetName& dataset) const;
  std::optional<DatasetShare> share(const ProjectName& source, const DatasetName& dataset,
                                    const ProjectName& target) const;

 private:
  using ShareKey = std::tuple<ProjectName, DatasetName, ProjectName>;

  void require_role(const ProjectName& project, const UserId& actor, Action action) const;

  mutable std::shared_mutex mutex_;
  std::map<ProjectName, Project> projects_;
  std::map<ProjectUser, Role> memberships_;
  std::map<ShareKey, Permission> shares_;
  std::vector<TenancyListener*> listeners_;
};

}  // namespace workbench
