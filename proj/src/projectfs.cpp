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

#include "workbench/projectfs.hpp"

#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>

#include "workbench/error.hpp"

namespace workbench {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) out.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string join_path(const std::vector<std::string>& segments) {
  std::string out;
  for (const auto& s : segments) out.append("/").append(s);
  return out.empty() ? "/" : out;
}

std::string parent_of(const std::string& path) {
  auto pos = path.rfind('/');
  return pos == 0 ? "/" : path.substr(0, pos);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Internal, "blob unreadable: " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Datasets named by a path of the form /Projects/{p}/DataSets/{d}/...
std::optional<std::pair<ProjectName, DatasetName>> dataset_of(const std::string& path) {
  auto segs = split_path(path);
  if (segs.size() >= 4 && segs[0] == "Projects" && segs[2] == "DataSets") {
    return std::make_pair(segs[1], segs[3]);
  }
  return std::nullopt;
}

}  // namespace

std::string project_root(std::string_view project) {
  return "/Projects/" + std::string(project);
}

std::string dataset_root(std::string_view project, std::string_view dataset) {
  return project_root(project) + "/DataSets/" + std::string(dataset);
}

ProjectFs::ProjectFs(Tenancy& tenancy, fs::path storage_dir)
    : tenancy_(tenancy), storage_dir_(std::move(storage_dir)) {
  fs::create_directories(storage_dir_ / "objects");
  dirs_.insert("/");
  dirs_.insert("/Projects");
  tenancy_.add_listener(this);
}

ProjectFs::~ProjectFs() = default;

MountView ProjectFs::mount_view(const ProjectName& project, const UserId& user) const {
  auto identity = tenancy_.scoped_identity(project, user);
  auto info = tenancy_.project(project);
  MountView view{project, identity, project_root(project), {}};
  for (const auto& dataset : info->dataset_names) {
    view.visible_datasets.push_back({dataset, project, Permission::ReadWrite});
  }
  for (const auto& share : tenancy_.shares_into(project)) {
    view.visible_datasets.push_back({share.dataset, share.source_project, share.permission});
  }
  return view;
}

ProjectFs::Resolved ProjectFs::resolve(const MountView& view, std::string_view path,
                                       Access access) const {
  auto role = tenancy_.role_of(view.project, view.identity.user);
  if (!role) throw Error(ErrorCode::NotAMember, view.identity.user + " is not a member of " + view.project);

  std::vector<std::string> segs;
  std::size_t floor = 0;
  if (path.empty() || path.front() != '/') {
    segs = split_path(project_root(view.project));
    floor = segs.size();
  }
  for (auto& seg : split_path(path)) {
    if (seg == ".") continue;
    if (seg == "..") {
      if (segs.size() <= floor || segs.empty()) throw Error(ErrorCode::PathEscape, "path escapes the view: " + std::string(path));
      segs.pop_back();
      continue;
    }
    if (seg.find('\0') != std::string::npos) throw Error(ErrorCode::InvalidArgument, "NUL in path");
    segs.push_back(std::move(seg));
  }
  if (segs.size() < 2 || segs[0] != "Projects") {
    throw Error(ErrorCode::PathEscape, "path outside the view: " + std::string(path));
  }

  Resolved out{join_path(segs), segs[1], std::nullopt};
  bool in_dataset = segs.size() >= 4 && segs[2] == "DataSets";

  if (out.owner_project == view.project) {
    if (!in_dataset) {
      if (access == Access::Write) throw Error(ErrorCode::Forbidden, "writes must target a dataset");
      return out;
    }
    out.dataset = segs[3];
    auto info = tenancy_.project(view.project);
    if (!info || !info->dataset_names.count(*out.dataset)) {
      throw Error(ErrorCode::NotFound, "no such dataset: " + *out.dataset);
    }
    if (access == Access::Write && *role != Role::DataOwner &&
        !tenancy_.shares_of(view.project, *out.dataset).empty()) {
      throw Error(ErrorCode::Forbidden, "only Data Owners may write shared datasets");
    }
    return out;
  }

  if (!in_dataset) throw Error(ErrorCode::PathEscape, "path outside the view: " + std::string(path));
  out.dataset = segs[3];
  auto share = tenancy_.share(out.owner_project, *out.dataset, view.project);
  if (!share) throw Error(ErrorCode::Forbidden, "dataset not shared with " + view.project);
  if (access == Access::Write &&
      (share->permission != Permission::ReadWrite || *role != Role::DataOwner)) {
    throw Error(ErrorCode::Forbidden, "shared dataset is not writable from " + view.project);
  }
  return out;
}

std::string ProjectFs::read(const MountView& view, std::string_view path) const {
  auto r = resolve(view, path, Access::Read);
  std::shared_lock lock(mutex_);
  auto it = index_.find(r.path);
  if (it == index_.end()) throw Error(ErrorCode::NotFound, "no such file: " + r.path);
  return read_file(blob_path(it->second));
}

void ProjectFs::write(const MountView& view, std::string_view path, std::string_view bytes) {
  auto r = resolve(view, path, Access::Write);
  auto ds_root = dataset_root(r.owner_project, *r.dataset);
  if (r.path == ds_root) throw Error(ErrorCode::InvalidArgument, "cannot write a dataset root");

  auto tmp = storage_dir_ / "objects" / ("tmp." + std::to_string(tmp_counter_.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Internal, "blob write failed");
  }

  std::unique_lock lock(mutex_);
  if (!dirs_.count(ds_root) || dirs_.count(r.path)) {
    fs::remove(tmp);
    throw Error(dirs_.count(r.path) ? ErrorCode::InvalidArgument : ErrorCode::NotFound,
                "cannot write " + r.path);
  }
  auto [it, inserted] = index_.try_emplace(r.path, next_id_);
  if (inserted) {
    objects_[next_id_] = StoredObject{next_id_, r.owner_project, r.path, 0};
    ++next_id_;
    for (auto dir = parent_of(r.path); dir.size() > ds_root.size(); dir = parent_of(dir)) {
      dirs_.insert(dir);
    }
  }
  fs::rename(tmp, blob_path(it->second));
  objects_[it->second].size = bytes.size();
}

std::vector<DirEntry> ProjectFs::list(const MountView& view, std::string_view path) const {
  auto r = resolve(view, path, Access::Read);
  std::shared_lock lock(mutex_);
  if (!dirs_.count(r.path)) throw Error(ErrorCode::NotFound, "no such directory: " + r.path);
  auto prefix = r.path == "/" ? std::string("/") : r.path + "/";
  std::vector<DirEntry> out;
  auto direct_child = [&](const std::string& p) {
    return p.size() > prefix.size() && p.compare(0, prefix.size(), prefix) == 0 &&
           p.find('/', prefix.size()) == std::string::npos;
  };
  for (auto it = dirs_.lower_bound(prefix); it != dirs_.end() && it->compare(0, prefix.size(), prefix) == 0; ++it) {
    if (direct_child(*it)) out.push_back({it->substr(prefix.size()), true, 0});
  }
  for (auto it = index_.lower_bound(prefix); it != index_.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
    if (direct_child(it->first)) {
      out.push_back({it->first.substr(prefix.size()), false, objects_.at(it->second).size});
    }
  }
  return out;
}

void ProjectFs::mkdir(const MountView& view, std::string_view path) {
  auto r = resolve(view, path, Access::Write);
  std::unique_lock lock(mutex_);
  auto ds_root = dataset_root(r.owner_project, *r.dataset);
  if (!dirs_.count(ds_root)) throw Error(ErrorCode::NotFound, "no such dataset: " + ds_root);
  if (index_.count(r.path)) throw Error(ErrorCode::InvalidArgument, "a file exists at " + r.path);
  for (auto dir = r.path; dir.size() > ds_root.size(); dir = parent_of(dir)) dirs_.insert(dir);
}

std::string ProjectFs::package_lib_path(const MountView& view) {
  auto path = dataset_root(view.project, kDefaultDataset) + "/.Rpackages/" + view.identity.scoped_name;
  std::unique_lock lock(mutex_);
  dirs_.insert(parent_of(path));
  dirs_.insert(path);
  return path;
}

GcReport ProjectFs::gc_check() const {
  GcReport report;
  std::shared_lock lock(mutex_);
  std::map<std::string, int> per_path;
  for (const auto& [id, obj] : objects_) {
    ++per_path[obj.path];
    auto idx = index_.find(obj.path);
    bool reachable = idx != index_.end() && idx->second == id;
    if (reachable) {
      auto ds = dataset_of(obj.path);
      auto info = ds ? tenancy_.project(ds->first) : std::nullopt;
      reachable = info && info->dataset_names.count(ds->second) && obj.owner_project == ds->first;
    }
    if (!reachable) report.unreachable.push_back(id);
  }
  for (const auto& [path, count] : per_path) {
    if (count > 1) report.duplicates.push_back(path);
  }
  for (const auto& entry : fs::directory_iterator(storage_dir_ / "objects")) {
    auto name = entry.path().filename().string();
    if (name.rfind("tmp.", 0) == 0) continue;
    ObjectId id = 0;
    try {
      id = std::stoull(name);
    } catch (const std::exception&) {
      ++report.orphan_blobs;
      continue;
    }
    if (!objects_.count(id)) ++report.orphan_blobs;
  }
  return report;
}

std::size_t ProjectFs::object_count() const {
  std::shared_lock lock(mutex_);
  return objects_.size();
}

std::optional<StoredObject> ProjectFs::stat(const std::string& logical_path) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(logical_path);
  if (it == index_.end()) return std::nullopt;
  return objects_.at(it->second);
}

fs::path ProjectFs::blob_path(ObjectId id) const {
  return storage_dir_ / "objects" / std::to_string(id);
}

void ProjectFs::on_project_created(const ProjectName& project) {
  std::unique_lock lock(mutex_);
  dirs_.insert(project_root(project));
  dirs_.insert(project_root(project) + "/DataSets");
}

void ProjectFs::on_dataset_created(const ProjectName& project, const DatasetName& dataset) {
  std::unique_lock lock(mutex_);
  dirs_.insert(dataset_root(project, dataset));
}

void ProjectFs::on_dataset_deleted(const ProjectName& project, const DatasetName& dataset) {
  std::unique_lock lock(mutex_);
  auto root = dataset_root(project, dataset);
  auto prefix = root + "/";
  auto under = [&](const std::string& p) { return p.compare(0, prefix.size(), prefix) == 0; };
  for (auto it = index_.lower_bound(prefix); it != index_.end() && under(it->first);) {
    fs::remove(blob_path(it->second));
    objects_.erase(it->second);
    it = index_.erase(it);
  }
  dirs_.erase(root);
  for (auto it = dirs_.lower_bound(prefix); it != dirs_.end() && under(*it);) it = dirs_.erase(it);
}

}  // namespace workbench
