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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "workbench/tenancy.hpp"

namespace workbench {

struct VisibleDataset {
  DatasetName name;
  ProjectName origin_project;
  Permission permission;
  friend bool operator==(const VisibleDataset&, const VisibleDataset&) = default;
};

// What a workspace sees under its mount point. The dataset list is a
// snapshot; every read/write re-checks access against current tenancy state.
struct MountView {
  ProjectName project;
  ProjectScopedIdentity identity;
  std::string root;  // /Projects/{project}
  std::vector<VisibleDataset> visible_datasets;
};

using ObjectId = std::uint64_t;

struct StoredObject {
  ObjectId id = 0;
  ProjectName owner_project;
  std::string path;
  std::uint64_t size = 0;
};

struct DirEntry {
  std::string name;
  bool is_dir = false;
  std::uint64_t size = 0;
};

struct GcReport {
  std::vector<ObjectId> unreachable;
  std::vector<std::string> duplicates;
  std::size_t orphan_blobs = 0;
  bool clean() const noexcept { return unreachable.empty() && duplicates.empty() && orphan_blobs == 0; }
};

// Persistent project filesystem. File bytes live as blobs in a host
// directory; logical paths map to blobs through an in-memory index, so a
// shared dataset is visible to other projects without a second blob.
//
// Logical layout:
//   /Projects/{project}/DataSets/{dataset}/...
// Paths given relative to a view resolve against its root and may not climb
// above it. Shared-in datasets are addressed by their origin path.
// Learns about projects and datasets through tenancy callbacks, so it must be
// constructed before the projects it serves are created.
class ProjectFs : public TenancyListener {
 public:
  ProjectFs(Tenancy& tenancy, std::filesystem::path storage_dir);
  ~ProjectFs() override;

  MountView mount_view(const ProjectName& project, const UserId& user) const;

  std::string read(const MountView& view, std::string_view path) const;
  void write(const MountView& view, std::string_view path, std::string_view bytes);
  std::vector<DirEntry> list(const MountView& view, std::string_view path) const;
  void mkdir(const MountView& view, std::string_view path);

  // Creates the directory if missing.
  std::string package_lib_path(const MountView& view);

  GcReport gc_check() const;

  std::size_t object_count() const;
  std::optional<StoredObject> stat(const std::string& logical_path) const;
  std::filesystem::path blob_path(ObjectId id) const;
  const std::filesystem::path& storage_dir() const noexcept { return storage_dir_; }

  void on_project_created(const ProjectName& project) override;
  void on_dataset_created(const ProjectName& project, const DatasetName& dataset) override;
  void on_dataset_deleted(const ProjectName& project, const DatasetName& dataset) override;

 private:
  enum class Access { Read, Write };
  struct Resolved {
    std::string path;            // normalized absolute logical path
    ProjectName owner_project;   // project owning the bytes
    std::optional<DatasetName> dataset;
  };

  Resolved resolve(const MountView& view, std::string_view path, Access access) const;

  Tenancy& tenancy_;
  std::filesystem::path storage_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ObjectId> index_;
  std::map<ObjectId, StoredObject> objects_;
  std::set<std::string> dirs_;
  ObjectId next_id_ = 1;
  std::atomic<std::uint64_t> tmp_counter_{0};
};

std::string project_root(std::string_view project);
std::string dataset_root(std::string_view project, std::string_view dataset);

}  // namespace workbench
