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

#include "workbench/tenancy.hpp"

#include "workbench/error.hpp"

namespace workbench {

std::string_view to_string(Role role) noexcept {
  return role == Role::DataOwner ? "DataOwner" : "DataScientist";
}

std::string_view to_string(Permission permission) noexcept {
  return permission == Permission::ReadOnly ? "ReadOnly" : "ReadWrite";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
  if (text == "DataOwner") return Role::DataOwner;
  if (text == "DataScientist") return Role::DataScientist;
  return std::nullopt;
}

std::optional<Permission> parse_permission(std::string_view text) noexcept {
  if (text == "ReadOnly") return Permission::ReadOnly;
  if (text == "ReadWrite") return Permission::ReadWrite;
  return std::nullopt;
}

std::string scoped_name(std::string_view project, std::string_view user) {
  std::string out;
  out.reserve(project.size() + user.size() + 2);
  out.append(project).append("__").append(user);
  return out;
}

Decision decide(std::optional<Role> role, Action action) noexcept {
  if (!role) return Decision::Deny;
  if (*role == Role::DataOwner) return Decision::Allow;
  switch (action) {
    case Action::StartWorkspace:
    case Action::StopWorkspace:
    case Action::ReadData:
    case Action::WriteData:
    case Action::QueryLogs:
      return Decision::Allow;
    default:
      return Decision::Deny;
  }
}

void Tenancy::add_listener(TenancyListener* listener) {
  std::unique_lock lock(mutex_);
  listeners_.push_back(listener);
}

Project Tenancy::create_project(const ProjectName& name, const UserId& owner) {
  if (!is_valid_project_name(name)) throw Error(ErrorCode::InvalidName, "invalid project name: " + name);
  if (!is_valid_user_id(owner)) throw Error(ErrorCode::InvalidName, "invalid user id: " + owner);
  Project created;
  std::vector<TenancyListener*> listeners;
  {
    std::unique_lock lock(mutex_);
    if (projects_.count(name)) throw Error(ErrorCode::DuplicateName, "project exists: " + name);
    created = Project{name, owner, now(), {DatasetName(kDefaultDataset)}};
    projects_.emplace(name, created);
    memberships_[{name, owner}] = Role::DataOwner;
    listeners = listeners_;
  }
  for (auto* l : listeners) {
    l->on_project_created(name);
    l->on_dataset_created(name, DatasetName(kDefaultDataset));
  }
  return created;
}

void Tenancy::require_role(const ProjectName& project, const UserId& actor, Action action) const {
  if (!projects_.count(project)) throw Error(ErrorCode::NoSuchProject, "no such project: " + project);
  auto it = memberships_.find({project, actor});
  std::optional<Role> role;
  if (it != memberships_.end()) role = it->second;
  if (decide(role, action) == Decision::Deny) {
    throw Error(ErrorCode::Forbidden, actor + " may not perform this action in " + project);
  }
}

Membership Tenancy::add_member(const ProjectName& project, const UserId& user, Role role,
                               const UserId& actor) {
  if (!is_valid_user_id(user)) throw Error(ErrorCode::InvalidName, "invalid user id: " + user);
  std::unique_lock lock(mutex_);
  require_role(project, actor, Action::AddMember);
  auto [it, inserted] = memberships_.try_emplace({project, user}, role);
  if (!inserted) throw Error(ErrorCode::AlreadyMember, user + " is already a member of " + project);
  return Membership{project, user, role};
}

Decision Tenancy::authorize(const UserId& user, const ProjectName& project, Action action) const {
  std::shared_lock lock(mutex_);
  auto it = memberships_.find({project, user});
  return decide(it == memberships_.end() ? std::nullopt : std::optional<Role>(it->second), action);
}

void Tenancy::create_dataset(const ProjectName& project, const DatasetName& dataset,
                             const UserId& actor) {
  if (!is_valid_dataset_name(dataset)) throw Error(ErrorCode::InvalidName, "invalid dataset name: " + dataset);
  std::vector<TenancyListener*> listeners;
  {
    std::unique_lock lock(mutex_);
    require_role(project, actor, Action::CreateDataset);
    auto& names = projects_.at(project).dataset_names;
    if (!names.insert(dataset).second) throw Error(ErrorCode::DuplicateName, "dataset exists: " + dataset);
    listeners = listeners_;
  }
  for (auto* l : listeners) l->on_dataset_created(project, dataset);
}

void Tenancy::delete_dataset(const ProjectName& project, const DatasetName& dataset,
                             const UserId& actor) {
  std::vector<TenancyListener*> listeners;
  {
    std::unique_lock lock(mutex_);
    require_role(project, actor, Action::DeleteDataset);
    auto& names = projects_.at(project).dataset_names;
    if (!names.erase(dataset)) throw Error(ErrorCode::NoSuchDataset, "no such dataset: " + dataset);
    for (auto it = shares_.begin(); it != shares_.end();) {
      if (std::get<0>(it->first) == project && std::get<1>(it->first) == dataset) {
        it = shares_.erase(it);
      } else {
        ++it;
      }
    }
    listeners = listeners_;
  }
  for (auto* l : listeners) l->on_dataset_deleted(project, dataset);
}

DatasetShare Tenancy::share_dataset(const ProjectName& source, const DatasetName& dataset,
                                    const ProjectName& target, Permission permission,
                                    const UserId& actor) {
  std::unique_lock lock(mutex_);
  require_role(source, actor, Action::ShareDataset);
  if (source == target) throw Error(ErrorCode::SelfShare, "cannot share a dataset with its own project");
  if (!projects_.at(source).dataset_names.count(dataset)) {
    throw Error(ErrorCode::NoSuchDataset, "no such dataset: " + source + "/" + dataset);
  }
  if (!projects_.count(target)) throw Error(ErrorCode::NoSuchProject, "no such project: " + target);
  auto [it, inserted] = shares_.try_emplace({source, dataset, target}, permission);
  if (!inserted) throw Error(ErrorCode::DuplicateName, "dataset already shared with " + target);
  return DatasetShare{source, dataset, target, permission};
}

void Tenancy::revoke_share(const ProjectName& source, const DatasetName& dataset,
                           const ProjectName& target, const UserId& actor) {
  std::unique_lock lock(mutex_);
  require_role(source, actor, Action::RevokeShare);
  if (!shares_.erase({source, dataset, target})) {
    throw Error(ErrorCode::NoSuchShare, "no share of " + source + "/" + dataset + " with " + target);
  }
}

ProjectScopedIdentity Tenancy::scoped_identity(const ProjectName& project, const UserId& user) const {
  std::shared_lock lock(mutex_);
  if (!memberships_.count({project, user})) {
    throw Error(ErrorCode::NotAMember, user + " is not a member of " + project);
  }
  return ProjectScopedIdentity{project, user, scoped_name(project, user)};
}

bool Tenancy::project_exists(const ProjectName& project) const {
  std::shared_lock lock(mutex_);
  return projects_.count(project) != 0;
}

std::optional<Project> Tenancy::project(const ProjectName& project) const {
  std::shared_lock lock(mutex_);
  auto it = projects_.find(project);
  if (it == projects_.end()) return std::nullopt;
  return it->second;
}

std::optional<Role> Tenancy::role_of(const ProjectName& project, const UserId& user) const {
  std::shared_lock lock(mutex_);
  auto it = memberships_.find({project, user});
  if (it == memberships_.end()) return std::nullopt;
  return it->second;
}

std::vector<Membership> Tenancy::members(const ProjectName& project) const {
  std::shared_lock lock(mutex_);
  std::vector<Membership> out;
  for (auto it = memberships_.lower_bound({project, ""});
       it != memberships_.end() && it->first.project == project; ++it) {
    out.push_back({project, it->first.user, it->second});
  }
  return out;
}

std::vector<DatasetShare> Tenancy::shares_into(const ProjectName& target) const {
  std::shared_lock lock(mutex_);
  std::vector<DatasetShare> out;
  for (const auto& [key, permission] : shares_) {
    if (std::get<2>(key) == target) {
      out.push_back({std::get<0>(key), std::get<1>(key), target, permission});
    }
  }
  return out;
}

std::vector<DatasetShare> Tenancy::shares_of(const ProjectName& source,
                                             const DatasetName& dataset) const {
  std::shared_lock lock(mutex_);
  std::vector<DatasetShare> out;
  for (auto it = shares_.lower_bound({source, dataset, ""});
       it != shares_.end() && std::get<0>(it->first) == source && std::get<1>(it->first) == dataset;
       ++it) {
    out.push_back({source, dataset, std::get<2>(it->first), it->second});
  }
  return out;
}

std::optional<DatasetShare> Tenancy::share(const ProjectName& source, const DatasetName& dataset,
                                           const ProjectName& target) const {
  std::shared_lock lock(mutex_);
  auto it = shares_.find({source, dataset, target});
  if (it == shares_.end()) return std::nullopt;
  return DatasetShare{source, dataset, target, it->second};
}

}  // namespace workbench
