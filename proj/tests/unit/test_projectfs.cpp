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
#include <openssl/evp.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "temp_dir.hpp"
#include "workbench/error.hpp"
#include "workbench/projectfs.hpp"

using namespace workbench;
using workbench::testing::error_of;
using workbench::testing::TempDir;

namespace {

std::string sha256(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ProjectFsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    tenancy.create_project("demo", "alice");
    tenancy.add_member("demo", "bob", Role::DataScientist, "alice");
    tenancy.create_project("lab2", "carol");
    tenancy.add_member("lab2", "dave", Role::DataScientist, "carol");
    tenancy.create_dataset("lab2", "corpus", "carol");
    tenancy.create_dataset("demo", "training_data", "alice");
  }
  TempDir dir;
  Tenancy tenancy;
  ProjectFs fs{tenancy, dir.path()};
};

}  // namespace

TEST_F(ProjectFsTest, MountViewIncludesSharedIn) {
  tenancy.share_dataset("lab2", "corpus", "demo", Permission::ReadOnly, "carol");
  auto view = fs.mount_view("demo", "alice");
  EXPECT_EQ(view.root, "/Projects/demo");
  EXPECT_EQ(view.identity.scoped_name, "demo__alice");
  auto& v = view.visible_datasets;
  EXPECT_NE(std::find(v.begin(), v.end(), VisibleDataset{"corpus", "lab2", Permission::ReadOnly}), v.end());
}

TEST_F(ProjectFsTest, MountViewNonMember) {
  EXPECT_EQ(error_of([&] { fs.mount_view("demo", "mallory"); }), ErrorCode::NotAMember);
}

TEST_F(ProjectFsTest, MembersSeeSameDatasets) {
  tenancy.share_dataset("lab2", "corpus", "demo", Permission::ReadOnly, "carol");
  EXPECT_EQ(fs.mount_view("demo", "alice").visible_datasets, fs.mount_view("demo", "bob").visible_datasets);
}

TEST_F(ProjectFsTest, WriteReadRoundTrip) {
  auto view = fs.mount_view("demo", "alice");
  fs.write(view, "/Projects/demo/DataSets/Rstudio/x.txt", "x");
  EXPECT_EQ(fs.read(view, "/Projects/demo/DataSets/Rstudio/x.txt"), "x");
  EXPECT_EQ(fs.read(view, "DataSets/Rstudio/x.txt"), "x");
  std::string binary("\0\x01\xff\n", 4);
  fs.write(view, "DataSets/Rstudio/sub/dir/b.bin", binary);
  EXPECT_EQ(fs.read(fs.mount_view("demo", "bob"), "DataSets/Rstudio/sub/dir/b.bin"), binary);
}

TEST_F(ProjectFsTest, WriteToReadOnlyShareForbidden) {
  tenancy.share_dataset("lab2", "corpus", "demo", Permission::ReadOnly, "carol");
  auto view = fs.mount_view("demo", "alice");
  EXPECT_EQ(error_of([&] { fs.write(view, "/Projects/lab2/DataSets/corpus/a", "z"); }), ErrorCode::Forbidden);
}

TEST_F(ProjectFsTest, ReadWriteShareAllowsOwnersOnly) {
  tenancy.share_dataset("lab2", "corpus", "demo", Permission::ReadWrite, "carol");
  fs.write(fs.mount_view("demo", "alice"), "/Projects/lab2/DataSets/corpus/a", "1");
  EXPECT_EQ(error_of([&] { fs.write(fs.mount_view("demo", "bob"), "/Projects/lab2/DataSets/corpus/a", "2"); }),
            ErrorCode::Forbidden);
  EXPECT_EQ(fs.read(fs.mount_view("lab2", "dave"), "DataSets/corpus/a"), "1");
}

TEST_F(ProjectFsTest, TraversalIsPathEscape) {
  auto view = fs.mount_view("demo", "alice");
  EXPECT_EQ(error_of([&] { fs.read(view, "../../other_project/secret"); }), ErrorCode::PathEscape);
  EXPECT_EQ(error_of([&] { fs.read(view, "/etc/passwd"); }), ErrorCode::PathEscape);
  EXPECT_EQ(error_of([&] { fs.read(view, "/Projects/lab2/Logs/x"); }), ErrorCode::PathEscape);
  EXPECT_EQ(error_of([&] { fs.read(view, "DataSets/../../../lab2/DataSets/corpus/a"); }), ErrorCode::PathEscape);
}

TEST_F(ProjectFsTest, UnsharedDatasetOfOtherProjectForbidden) {
  auto owner = fs.mount_view("lab2", "carol");
  fs.write(owner, "DataSets/corpus/secret", "s3cret");
  auto view = fs.mount_view("demo", "alice");
  EXPECT_EQ(error_of([&] { fs.read(view, "/Projects/lab2/DataSets/corpus/secret"); }), ErrorCode::Forbidden);
}

TEST_F(ProjectFsTest, ShareWritesThroughSingleObject) {
  tenancy.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "alice");
  auto src = fs.mount_view("demo", "alice");
  auto dst = fs.mount_view("lab2", "dave");
  const std::string path = "/Projects/demo/DataSets/training_data/f.csv";
  fs.write(src, path, "abc");
  auto before = fs.object_count();
  fs.write(src, path, "abcd");
  EXPECT_EQ(fs.object_count(), before);
  auto obj = fs.stat(path);
  ASSERT_TRUE(obj);
  auto blob = slurp(fs.blob_path(obj->id));
  auto seen = fs.read(dst, path);
  EXPECT_EQ(sha256(blob), sha256("abcd"));
  EXPECT_EQ(sha256(seen), sha256(blob));
  EXPECT_EQ(error_of([&] { fs.write(dst, path, "x"); }), ErrorCode::Forbidden);
}

TEST_F(ProjectFsTest, RevokeCutsAccessImmediately) {
  tenancy.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "alice");
  auto src = fs.mount_view("demo", "alice");
  auto dst = fs.mount_view("lab2", "dave");
  fs.write(src, "DataSets/training_data/f", "v");
  EXPECT_EQ(fs.read(dst, "/Projects/demo/DataSets/training_data/f"), "v");
  tenancy.revoke_share("demo", "training_data", "lab2", "alice");
  EXPECT_EQ(error_of([&] { fs.read(dst, "/Projects/demo/DataSets/training_data/f"); }), ErrorCode::Forbidden);
  auto obj = fs.stat("/Projects/demo/DataSets/training_data/f");
  ASSERT_TRUE(obj);
  EXPECT_EQ(obj->owner_project, "demo");
  auto report = fs.gc_check();
  EXPECT_TRUE(report.clean());
}

TEST_F(ProjectFsTest, DataScientistWriteRules) {
  auto bob = fs.mount_view("demo", "bob");
  fs.write(bob, "DataSets/training_data/mine", "ok");
  tenancy.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "alice");
  EXPECT_EQ(error_of([&] { fs.write(bob, "DataSets/training_data/mine", "no"); }), ErrorCode::Forbidden);
  EXPECT_EQ(error_of([&] { fs.write(bob, "notes.txt", "no"); }), ErrorCode::Forbidden);
}

TEST_F(ProjectFsTest, PackageLibPath) {
  auto a = fs.package_lib_path(fs.mount_view("demo", "alice"));
  auto b = fs.package_lib_path(fs.mount_view("demo", "bob"));
  EXPECT_EQ(a, "/Projects/demo/DataSets/Rstudio/.Rpackages/demo__alice");
  EXPECT_NE(a, b);
  auto view = fs.mount_view("demo", "alice");
  fs.write(view, a + "/ggplot2/DESCRIPTION", "Package: ggplot2\n");
  auto entries = fs.list(view, a);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].name, "ggplot2");
  EXPECT_TRUE(entries[0].is_dir);
}

TEST_F(ProjectFsTest, ListAndMkdir) {
  auto view = fs.mount_view("demo", "alice");
  fs.mkdir(view, "DataSets/Rstudio/empty");
  fs.write(view, "DataSets/Rstudio/a", "12345");
  std::map<std::string, std::pair<bool, std::uint64_t>> got;
  for (const auto& e : fs.list(view, "DataSets/Rstudio")) got[e.name] = {e.is_dir, e.size};
  EXPECT_EQ(got["empty"], std::make_pair(true, std::uint64_t{0}));
  EXPECT_EQ(got["a"], std::make_pair(false, std::uint64_t{5}));
  EXPECT_EQ(error_of([&] { fs.list(view, "DataSets/Rstudio/missing"); }), ErrorCode::NotFound);
  EXPECT_EQ(error_of([&] { fs.read(view, "DataSets/nope/x"); }), ErrorCode::NotFound);
}

TEST_F(ProjectFsTest, ConcurrentWritersNeverInterleave) {
  auto view = fs.mount_view("demo", "alice");
  const std::string path = "DataSets/Rstudio/contended";
  std::vector<std::string> payloads;
  for (int i = 0; i < 8; ++i) payloads.push_back(std::string(64 * 1024, char('a' + i)));
  std::vector<std::thread> writers;
  for (int i = 0; i < 8; ++i)
    writers.emplace_back([&, i] {
      for (int k = 0; k < 20; ++k) fs.write(view, path, payloads[i]);
    });
  std::atomic<bool> torn{false};
  std::thread reader([&] {
    for (int k = 0; k < 200; ++k) {
      try {
        auto s = fs.read(view, path);
        if (std::find(payloads.begin(), payloads.end(), s) == payloads.end()) torn = true;
      } catch (const Error&) {
      }
    }
  });
  for (auto& w : writers) w.join();
  reader.join();
  EXPECT_FALSE(torn);
  auto final_bytes = fs.read(view, path);
  EXPECT_NE(std::find(payloads.begin(), payloads.end(), final_bytes), payloads.end());
  EXPECT_TRUE(fs.gc_check().clean());
}

TEST_F(ProjectFsTest, DeleteDatasetRemovesObjects) {
  auto view = fs.mount_view("demo", "alice");
  fs.write(view, "DataSets/training_data/a", "1");
  fs.write(view, "DataSets/training_data/b", "2");
  fs.write(view, "DataSets/Rstudio/keep", "3");
  tenancy.create_dataset("demo", "training_data2", "alice");
  fs.write(view, "DataSets/training_data2/c", "4");
  tenancy.delete_dataset("demo", "training_data", "alice");
  EXPECT_EQ(fs.object_count(), 2u);
  EXPECT_EQ(fs.read(view, "DataSets/training_data2/c"), "4");
  EXPECT_TRUE(fs.gc_check().clean());
}

// Randomized create/share/write/revoke: an independent model tracks live
// files from the operations performed and must match the store exactly.
TEST(ProjectFsProperty, RandomizedSequencesStayClean) {
  TempDir dir;
  Tenancy t;
  ProjectFs fs(t, dir.path());
  std::vector<std::string> projects = {"p0", "p1", "p2"};
  for (const auto& p : projects) t.create_project(p, "own");
  std::map<std::string, std::string> model;  // logical path -> bytes
  std::vector<std::pair<std::string, std::string>> datasets;
  std::mt19937 rng(5);
  for (int step = 0; step < 600; ++step) {
    switch (rng() % 5) {
      case 0: {
        auto p = projects[rng() % projects.size()];
        auto d = "d" + std::to_string(rng() % 6);
        if (t.project(p)->dataset_names.count(d)) break;
        t.create_dataset(p, d, "own");
        datasets.emplace_back(p, d);
        break;
      }
      case 1:
      case 2: {
        if (datasets.empty()) break;
        auto [p, d] = datasets[rng() % datasets.size()];
        auto path = dataset_root(p, d) + "/f" + std::to_string(rng() % 4);
        auto bytes = std::to_string(rng());
        fs.write(fs.mount_view(p, "own"), path, bytes);
        model[path] = bytes;
        break;
      }
      case 3: {
        if (datasets.empty()) break;
        auto [p, d] = datasets[rng() % datasets.size()];
        auto tgt = projects[rng() % projects.size()];
        if (tgt == p) break;
        if (t.share(p, d, tgt)) t.revoke_share(p, d, tgt, "own");
        else t.share_dataset(p, d, tgt, Permission::ReadOnly, "own");
        break;
      }
      case 4: {
        if (datasets.empty() || rng() % 4) break;
        auto idx = rng() % datasets.size();
        auto [p, d] = datasets[idx];
        t.delete_dataset(p, d, "own");
        datasets.erase(datasets.begin() + long(idx));
        auto prefix = dataset_root(p, d) + "/";
        std::erase_if(model, [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
        break;
      }
    }
    auto report = fs.gc_check();
    ASSERT_TRUE(report.clean()) << "step " << step;
    ASSERT_EQ(fs.object_count(), model.size()) << "step " << step;
  }
  for (const auto& [path, bytes] : model) {
    auto obj = fs.stat(path);
    ASSERT_TRUE(obj) << path;
    EXPECT_EQ(slurp(fs.blob_path(obj->id)), bytes);
  }
}

TEST(ProjectFsPersistence, IndependentOfViewLifetime) {
  TempDir dir;
  Tenancy t;
  ProjectFs fs(t, dir.path());
  t.create_project("demo", "alice");
  {
    auto view = fs.mount_view("demo", "alice");
    fs.write(view, "DataSets/Rstudio/a.R", "x <- 1\n");
  }
  EXPECT_EQ(fs.read(fs.mount_view("demo", "alice"), "DataSets/Rstudio/a.R"), "x <- 1\n");
}
