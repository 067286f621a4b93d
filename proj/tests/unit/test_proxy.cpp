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

#include <atomic>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "temp_dir.hpp"
#include "workbench/backend.hpp"
#include "workbench/error.hpp"
#include "workbench/proxy.hpp"
#include "workbench/token.hpp"

using namespace workbench;
using namespace std::chrono_literals;
using workbench::testing::error_of;

namespace {

// Ports for backends in this suite; other suites use disjoint ranges.
constexpr Port kBackendBase = 31100;

ProxyRequest get(const std::string& path, const std::string& token) {
  ProxyRequest r;
  r.path = path;
  if (!token.empty()) r.headers.emplace("Authorization", "Bearer " + token);
  return r;
}

BackendSpec backend(const std::string& name, Port port, const std::string& project, const std::string& user) {
  BackendSpec s;
  s.name = name;
  s.listen_port = port;
  s.memory_limit = Mebibytes{2048};
  s.cpu_limit = Millicores{1000};
  s.project = project;
  s.user = user;
  return s;
}

}  // namespace

TEST(PortPoolTest, LowestFreeAndReuse) {
  PortPool pool;
  EXPECT_EQ(pool.allocate(), 30000);
  pool.release(30000);
  EXPECT_EQ(pool.allocate(), 30000);
  EXPECT_EQ(pool.allocate(), 30001);
  EXPECT_TRUE(pool.is_allocated(30001));
  pool.release(30000);
  EXPECT_EQ(pool.allocate(), 30000);
}

TEST(PortPoolTest, ExhaustsAfterWholeRange) {
  PortPool pool;
  std::size_t expected = 0;
  for (int p = 30000; p <= 32767; ++p) ++expected;  // direct enumeration
  EXPECT_EQ(expected, 2768u);
  EXPECT_EQ(pool.capacity(), expected);
  std::set<Port> seen;
  for (std::size_t i = 0; i < expected; ++i) seen.insert(pool.allocate());
  EXPECT_EQ(seen.size(), expected);
  EXPECT_EQ(*seen.begin(), 30000);
  EXPECT_EQ(*seen.rbegin(), 32767);
  EXPECT_EQ(error_of([&] { pool.allocate(); }), ErrorCode::PoolExhausted);
}

TEST(PortPoolTest, ConcurrentAllocationsUnique) {
  PortPool pool(40000, 40999);
  std::mutex m;
  std::set<Port> all;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      std::vector<Port> mine;
      for (int i = 0; i < 125; ++i) mine.push_back(pool.allocate());
      std::lock_guard lock(m);
      for (auto p : mine) EXPECT_TRUE(all.insert(p).second) << p;
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(all.size(), 1000u);
}

TEST(PortPoolTest, CustomRangeValidation) {
  PortPool pool(31000, 31001);
  EXPECT_TRUE(pool.contains(31001));
  EXPECT_FALSE(pool.contains(30000));
  pool.allocate();
  pool.allocate();
  EXPECT_EQ(error_of([&] { pool.allocate(); }), ErrorCode::PoolExhausted);
}

TEST(Headers, HopByHopAndTokens) {
  EXPECT_TRUE(is_hop_by_hop_header("Connection"));
  EXPECT_TRUE(is_hop_by_hop_header("transfer-encoding"));
  EXPECT_FALSE(is_hop_by_hop_header("Authorization"));
  Headers h{{"authorization", "Bearer abc"}};
  EXPECT_EQ(extract_token(h), "abc");
  Headers c{{"Cookie", "a=1; workbench_token=xyz; b=2"}};
  EXPECT_EQ(extract_token(c), "xyz");
  EXPECT_EQ(extract_token(Headers{{"Authorization", "Basic abc"}}), std::nullopt);
}

TEST(Paths, ParseWorkspacePath) {
  auto p = parse_workspace_path("/workspace/demo/alice/health");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->project, "demo");
  EXPECT_EQ(p->user, "alice");
  EXPECT_EQ(p->rest, "/health");
  EXPECT_EQ(parse_workspace_path("/workspace/demo/alice")->rest, "/");
  EXPECT_FALSE(parse_workspace_path("/api/x"));
  EXPECT_FALSE(parse_workspace_path("/workspace/demo/"));
}

TEST(Routes, RegisterResolveUnregister) {
  PortPool pool;
  IngressProxy proxy(pool);
  proxy.register_route({"demo", "alice", "10.0.0.2", 30101, "t1"});
  auto r = proxy.lookup("demo", "alice");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->backend_host, "10.0.0.2");
  EXPECT_EQ(r->backend_port, 30101);
  EXPECT_EQ(error_of([&] { proxy.register_route({"demo", "alice", "10.0.0.3", 30102, "t2"}); }),
            ErrorCode::DuplicateRoute);
  proxy.unregister_route("demo", "alice");
  EXPECT_FALSE(proxy.lookup("demo", "alice"));
  EXPECT_EQ(error_of([&] { proxy.resolve_and_forward(get("/workspace/demo/alice/", "t1")); }), ErrorCode::UnknownRoute);
  EXPECT_EQ(error_of([&] { proxy.unregister_route("demo", "alice"); }), ErrorCode::UnknownRoute);
}

class ProxyForwardTest : public ::testing::Test {
 protected:
  void SetUp() override {
    alice_token = generate_workspace_token();
    bob_token = generate_workspace_token();
    alice = driver.create_instance(backend("demo__alice_rstudio", kBackendBase, "demo", "alice")).id;
    bob = driver.create_instance(backend("demo__bob_rstudio", kBackendBase + 1, "demo", "bob")).id;
    proxy.register_route({"demo", "alice", "127.0.0.1", kBackendBase, alice_token});
    proxy.register_route({"demo", "bob", "127.0.0.1", Port(kBackendBase + 1), bob_token});
  }
  PortPool pool;
  IngressProxy proxy{pool, 2s};
  SimDriver driver{SimDriverOptions{"127.0.0.1", 50ms, 2}};
  std::string alice_token, bob_token;
  BackendId alice, bob;
};

TEST_F(ProxyForwardTest, HappyPath) {
  auto res = proxy.resolve_and_forward(get("/workspace/demo/alice/health", alice_token));
  EXPECT_EQ(res.status, 200);
  auto j = nlohmann::json::parse(res.body);
  EXPECT_EQ(j["name"], "demo__alice_rstudio");
  EXPECT_EQ(proxy.resolve_and_forward(get("/workspace/demo/alice/whoami", alice_token)).body, "demo__alice_rstudio");
}

TEST_F(ProxyForwardTest, ForeignTokenNeverReachesBackend) {
  auto before = driver.received_requests(bob).size();
  EXPECT_EQ(error_of([&] { proxy.resolve_and_forward(get("/workspace/demo/bob/whoami", alice_token)); }),
            ErrorCode::Unauthorized);
  EXPECT_EQ(error_of([&] { proxy.resolve_and_forward(get("/workspace/demo/bob/whoami", "")); }),
            ErrorCode::Unauthorized);
  EXPECT_EQ(driver.received_requests(bob).size(), before);
}

TEST_F(ProxyForwardTest, CookieFallback) {
  ProxyRequest r;
  r.path = "/workspace/demo/alice/whoami";
  r.headers.emplace("Cookie", "workbench_token=" + alice_token);
  EXPECT_EQ(proxy.resolve_and_forward(r).body, "demo__alice_rstudio");
}

TEST_F(ProxyForwardTest, DeadBackendIsUnreachable) {
  driver.destroy_instance(alice);
  EXPECT_EQ(error_of([&] { proxy.resolve_and_forward(get("/workspace/demo/alice/health", alice_token)); }),
            ErrorCode::BackendUnreachable);
}

TEST_F(ProxyForwardTest, PrefixStrippedAndQueryKept) {
  auto r = get("/workspace/demo/alice/whoami", alice_token);
  r.query = "x=1";
  proxy.resolve_and_forward(r);
  auto seen = driver.received_requests(alice);
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.back().path, "/whoami");
}

// Random clients hit random routes with random tokens; each response is
// compared with the identity the route table held when the request was sent.
TEST_F(ProxyForwardTest, RandomizedRoutingIsExact) {
  std::map<std::string, std::pair<std::string, std::string>> routes = {
      {"alice", {alice_token, "demo__alice_rstudio"}}, {"bob", {bob_token, "demo__bob_rstudio"}}};
  std::atomic<int> wrong{0}, ok{0}, denied{0};
  std::vector<std::thread> clients;
  for (int c = 0; c < 4; ++c)
    clients.emplace_back([&, c] {
      std::mt19937 rng(c);
      for (int i = 0; i < 100; ++i) {
        auto target = rng() % 2 ? "alice" : "bob";
        auto holder = rng() % 2 ? "alice" : "bob";
        try {
          auto res = proxy.resolve_and_forward(get(std::string("/workspace/demo/") + target + "/whoami", routes[holder].first));
          if (std::string(target) != holder || res.body != routes[target].second) ++wrong;
          else ++ok;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Unauthorized || std::string(target) == holder) ++wrong;
          else ++denied;
        }
      }
    });
  for (auto& t : clients) t.join();
  EXPECT_EQ(wrong.load(), 0);
  EXPECT_EQ(ok + denied, 400);
  for (const auto& req : driver.received_requests(bob)) EXPECT_NE(req.authorization, "Bearer " + alice_token);
  for (const auto& req : driver.received_requests(alice)) EXPECT_NE(req.authorization, "Bearer " + bob_token);
}

// Route churn: one thread repeatedly unregisters and re-registers a route
// with a fresh token while readers forward; a request either reaches the
// registered backend or is rejected, never misrouted.
TEST_F(ProxyForwardTest, ChurnNeverMisroutes) {
  std::atomic<bool> stop{false};
  std::mutex token_mutex;
  std::string current = bob_token;
  std::thread churn([&] {
    for (int i = 0; i < 50; ++i) {
      auto fresh = generate_workspace_token();
      proxy.unregister_route("demo", "bob");
      {
        std::lock_guard lock(token_mutex);
        current = fresh;
      }
      proxy.register_route({"demo", "bob", "127.0.0.1", Port(kBackendBase + 1), fresh});
      std::this_thread::sleep_for(1ms);
    }
    stop = true;
  });
  std::atomic<int> wrong{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r)
    readers.emplace_back([&] {
      while (!stop) {
        std::string token;
        {
          std::lock_guard lock(token_mutex);
          token = current;
        }
        try {
          auto res = proxy.resolve_and_forward(get("/workspace/demo/bob/whoami", token));
          if (res.body != "demo__bob_rstudio") ++wrong;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Unauthorized && e.code() != ErrorCode::UnknownRoute) ++wrong;
        }
        try {
          auto res = proxy.resolve_and_forward(get("/workspace/demo/alice/whoami", alice_token));
          if (res.body != "demo__alice_rstudio") ++wrong;
        } catch (const Error&) {
          ++wrong;
        }
      }
    });
  churn.join();
  for (auto& t : readers) t.join();
  EXPECT_EQ(wrong.load(), 0);
}

TEST(ProxyHeaders, HopByHopStrippedBothWays) {
  httplib::Server echo;
  echo.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  std::mutex m;
  httplib::Headers seen;
  echo.Post("/echo", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(m);
      seen = req.headers;
    }
    res.set_header("Keep-Alive", "timeout=5");
    res.set_header("X-Backend", "yes");
    res.set_content(req.body, "text/plain");
  });
  int port = echo.bind_to_any_port("127.0.0.1");
  std::thread t([&] { echo.listen_after_bind(); });
  struct Join {
    httplib::Server& s;
    std::thread& t;
    ~Join() {
      s.stop();
      if (t.joinable()) t.join();
    }
  } join{echo, t};
  echo.wait_until_ready();

  PortPool pool{Port(port), Port(port)};
  IngressProxy proxy(pool);
  proxy.register_route({"demo", "alice", "127.0.0.1", Port(port), "tok"});
  ProxyRequest r;
  r.method = "POST";
  r.path = "/workspace/demo/alice/echo";
  r.headers = {{"Authorization", "Bearer tok"}, {"Proxy-Authorization", "x"}, {"TE", "trailers"},
               {"Connection", "X-Drop"}, {"X-Drop", "1"}, {"X-Keep", "1"}};
  r.body = "payload";
  ProxyResponse res;
  std::string failure;
  try {
    res = proxy.resolve_and_forward(r);
  } catch (const std::exception& e) {
    failure = e.what();
  }
  ASSERT_EQ(failure, "");
  EXPECT_EQ(res.body, "payload");
  EXPECT_EQ(res.headers.count("X-Backend"), 1u);
  EXPECT_EQ(res.headers.count("Keep-Alive"), 0u);
  std::lock_guard lock(m);
  EXPECT_EQ(seen.count("X-Keep"), 1u);
  EXPECT_EQ(seen.count("X-Drop"), 0u);
  EXPECT_EQ(seen.count("Proxy-Authorization"), 0u);
  EXPECT_EQ(seen.count("TE"), 0u);
}
