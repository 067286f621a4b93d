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
#include <random>
#include <set>

#include "temp_dir.hpp"
#include "workbench/error.hpp"
#include "workbench/tenancy.hpp"

using namespace workbench;
using workbench::testing::error_of;

namespace {

const Action kAllActions[] = {Action::StartWorkspace, Action::StopWorkspace, Action::ReadData,     Action::WriteData,
                              Action::QueryLogs,      Action::AddMember,     Action::CreateDataset, Action::DeleteDataset,
                              Action::ShareDataset,   Action::RevokeShare};

class TenancyTest : public ::testing::Test {
 protected:
  void SetUp() override {
    t.create_project("demo", "alice");
    t.add_member("demo", "bob", Role::DataScientist, "alice");
  }
  Tenancy t;
};

}  // namespace

TEST_F(TenancyTest, CreateProjectMakesOwnerMembership) {
  auto p = t.project("demo");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->name, "demo");
  EXPECT_EQ(p->owner, "alice");
  EXPECT_EQ(t.role_of("demo", "alice"), Role::DataOwner);
  EXPECT_TRUE(p->dataset_names.contains(std::string(kDefaultDataset)));
}

TEST_F(TenancyTest, DuplicateProjectRejected) {
  EXPECT_EQ(error_of([&] { t.create_project("demo", "bob"); }), ErrorCode::DuplicateName);
}

TEST_F(TenancyTest, InvalidProjectNameRejected) {
  EXPECT_EQ(error_of([&] { t.create_project("Demo Project!", "alice"); }), ErrorCode::InvalidName);
  EXPECT_EQ(error_of([&] { t.create_project("", "alice"); }), ErrorCode::InvalidName);
  EXPECT_EQ(error_of([&] { t.create_project(std::string(64, 'a'), "alice"); }), ErrorCode::InvalidName);
  EXPECT_NO_THROW(t.create_project(std::string(63, 'a'), "alice"));
}

TEST_F(TenancyTest, AddMember) {
  auto m = t.add_member("demo", "carol", Role::DataScientist, "alice");
  EXPECT_EQ(m, (Membership{"demo", "carol", Role::DataScientist}));
  EXPECT_EQ(t.role_of("demo", "bob"), Role::DataScientist);
}

TEST_F(TenancyTest, AddMemberRequiresDataOwner) {
  EXPECT_EQ(error_of([&] { t.add_member("demo", "carol", Role::DataOwner, "bob"); }), ErrorCode::Forbidden);
  EXPECT_FALSE(t.role_of("demo", "carol"));
}

TEST_F(TenancyTest, AddMemberUnknownProject) {
  EXPECT_EQ(error_of([&] { t.add_member("nope", "bob", Role::DataScientist, "alice"); }), ErrorCode::NoSuchProject);
}

TEST_F(TenancyTest, AddMemberTwice) {
  EXPECT_EQ(error_of([&] { t.add_member("demo", "bob", Role::DataOwner, "alice"); }), ErrorCode::AlreadyMember);
}

TEST_F(TenancyTest, AuthorizeExamples) {
  t.create_project("other", "carol");
  EXPECT_EQ(t.authorize("bob", "other", Action::StartWorkspace), Decision::Deny);
  EXPECT_EQ(t.authorize("bob", "demo", Action::StartWorkspace), Decision::Allow);
  EXPECT_EQ(t.authorize("bob", "demo", Action::ShareDataset), Decision::Deny);
  EXPECT_EQ(t.authorize("alice", "demo", Action::ShareDataset), Decision::Allow);
}

TEST_F(TenancyTest, NonMembersAreDeniedEverything) {
  for (auto a : kAllActions) {
    EXPECT_EQ(t.authorize("mallory", "demo", a), Decision::Deny);
    EXPECT_EQ(t.authorize("alice", "missing", a), Decision::Deny);
  }
}

TEST(RoleMatrix, DataOwnerIsSupersetOfDataScientist) {
  std::set<Action> scientist = {Action::StartWorkspace, Action::StopWorkspace, Action::ReadData, Action::WriteData,
                                Action::QueryLogs};
  for (auto a : kAllActions) {
    EXPECT_EQ(decide(Role::DataOwner, a), Decision::Allow);
    EXPECT_EQ(decide(Role::DataScientist, a), scientist.contains(a) ? Decision::Allow : Decision::Deny);
    EXPECT_EQ(decide(std::nullopt, a), Decision::Deny);
  }
}

TEST_F(TenancyTest, ShareDataset) {
  t.create_project("lab2", "carol");
  t.create_dataset("demo", "training_data", "alice");
  auto s = t.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "alice");
  EXPECT_EQ(s, (DatasetShare{"demo", "training_data", "lab2", Permission::ReadOnly}));
  EXPECT_EQ(t.shares_into("lab2"), std::vector<DatasetShare>{s});
  EXPECT_EQ(error_of([&] { t.share_dataset("demo", "training_data", "lab2", Permission::ReadWrite, "alice"); }),
            ErrorCode::DuplicateName);
}

TEST_F(TenancyTest, ShareErrors) {
  t.create_project("lab2", "carol");
  t.create_dataset("demo", "training_data", "alice");
  EXPECT_EQ(error_of([&] { t.share_dataset("demo", "training_data", "demo", Permission::ReadOnly, "alice"); }),
            ErrorCode::SelfShare);
  EXPECT_EQ(error_of([&] { t.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "bob"); }),
            ErrorCode::Forbidden);
  EXPECT_EQ(error_of([&] { t.share_dataset("demo", "missing", "lab2", Permission::ReadOnly, "alice"); }),
            ErrorCode::NoSuchDataset);
  EXPECT_EQ(error_of([&] { t.share_dataset("demo", "training_data", "zzz", Permission::ReadOnly, "alice"); }),
            ErrorCode::NoSuchProject);
}

TEST_F(TenancyTest, RevokeShare) {
  t.create_project("lab2", "carol");
  t.create_dataset("demo", "training_data", "alice");
  t.share_dataset("demo", "training_data", "lab2", Permission::ReadOnly, "alice");
  t.revoke_share("demo", "training_data", "lab2", "alice");
  EXPECT_TRUE(t.shares_into("lab2").empty());
  EXPECT_EQ(error_of([&] { t.revoke_share("demo", "training_data", "lab2", "alice"); }), ErrorCode::NoSuchShare);
}

TEST_F(TenancyTest, ScopedIdentity) {
  auto id = t.scoped_identity("demo", "alice");
  EXPECT_EQ(id.scoped_name, "demo__alice");
  EXPECT_EQ(id, t.scoped_identity("demo", "alice"));
  EXPECT_EQ(error_of([&] { t.scoped_identity("demo", "mallory"); }), ErrorCode::NotAMember);
}

// Injectivity: distinct (project, user) pairs over the valid alphabets never
// collide, including the adversarial case of underscores in project names.
TEST(ScopedName, InjectiveOverValidNames) {
  std::vector<std::string> projects = {"a", "a_", "a__b", "a_b", "b", "a__", "_a"};
  std::vector<std::string> users = {"b", "a", "_b", "b_", "a.b", "a-b"};
  std::map<std::string, std::pair<std::string, std::string>> seen;
  for (const auto& p : projects) {
    if (!is_valid_project_name(p)) continue;
    for (const auto& u : users) {
      if (!is_valid_user_id(u)) continue;
      auto [it, fresh] = seen.emplace(scoped_name(p, u), std::pair{p, u});
      EXPECT_TRUE(fresh) << p << "/" << u << " collides with " << it->second.first << "/" << it->second.second;
    }
  }
  std::mt19937 rng(7);
  auto rand_name = [&](std::string_view alphabet, int max_len) {
    std::string s;
    int len = 1 + int(rng() % max_len);
    for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 20000; ++i) {
    auto p = rand_name("ab_", 5);
    auto u = rand_name("ab.-", 4);
    if (!is_valid_user_id(u)) continue;
    auto [it, fresh] = seen.emplace(scoped_name(p, u), std::pair{p, u});
    if (!fresh) EXPECT_EQ(it->second, (std::pair{p, u}));
  }
}

TEST_F(TenancyTest, DatasetLifecycle) {
  t.create_dataset("demo", "ds1", "alice");
  EXPECT_EQ(error_of([&] { t.create_dataset("demo", "ds1", "alice"); }), ErrorCode::DuplicateName);
  EXPECT_EQ(error_of([&] { t.create_dataset("demo", "ds2", "bob"); }), ErrorCode::Forbidden);
  t.create_project("lab2", "carol");
  t.share_dataset("demo", "ds1", "lab2", Permission::ReadOnly, "alice");
  t.delete_dataset("demo", "ds1", "alice");
  EXPECT_TRUE(t.shares_into("lab2").empty());
  EXPECT_EQ(error_of([&] { t.delete_dataset("demo", "ds1", "alice"); }), ErrorCode::NoSuchDataset);
}

// Shares are metadata: randomized share/revoke never changes the number of
// datasets, which equals the number of create events (oracle counter).
TEST(TenancyProperty, SharingNeverDuplicatesDatasets) {
  Tenancy t;
  std::vector<std::string> projects = {"p0", "p1", "p2", "p3"};
  std::size_t created = 0;
  for (const auto& p : projects) {
    t.create_project(p, "owner");
    ++created;  // default dataset
  }
  std::mt19937 rng(42);
  std::vector<std::pair<std::string, std::string>> datasets;
  for (const auto& p : projects)
    for (int d = 0; d < 3; ++d) {
      t.create_dataset(p, "d" + std::to_string(d), "owner");
      datasets.emplace_back(p, "d" + std::to_string(d));
      ++created;
    }
  for (int i = 0; i < 500; ++i) {
    auto [src, ds] = datasets[rng() % datasets.size()];
    auto tgt = projects[rng() % projects.size()];
    if (tgt == src) continue;
    if (t.share(src, ds, tgt)) t.revoke_share(src, ds, tgt, "owner");
    else t.share_dataset(src, ds, tgt, rng() % 2 ? Permission::ReadOnly : Permission::ReadWrite, "owner");
    std::size_t count = 0;
    for (const auto& p : projects) count += t.project(p)->dataset_names.size();
    ASSERT_EQ(count, created);
  }
}

TEST(TenancyRoles, PerMembershipRoles) {
  Tenancy t;
  t.create_project("a", "alice");
  t.create_project("b", "bob");
  t.add_member("b", "alice", Role::DataScientist, "bob");
  EXPECT_EQ(t.role_of("a", "alice"), Role::DataOwner);
  EXPECT_EQ(t.role_of("b", "alice"), Role::DataScientist);
}
