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

// workbenchctl: operator CLI for the workspace control plane.

#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "workbench/codec.hpp"
#include "workbench/control_plane.hpp"
#include "workbench/error.hpp"

using nlohmann::json;
using namespace workbench;

namespace {

struct ClientOptions {
  std::string server = "http://127.0.0.1:8080";
  std::string token;
  bool insecure = false;
};

json call(const ClientOptions& c, const std::string& method, const std::string& path, const json* body = nullptr,
          std::string* raw = nullptr) {
  httplib::Client client(c.server);
  client.enable_server_certificate_verification(!c.insecure);
  client.set_read_timeout(std::chrono::seconds(60));
  httplib::Headers headers;
  if (!c.token.empty()) headers.emplace("Authorization", "Bearer " + c.token);
  httplib::Result res;
  std::string payload = body ? body->dump() : std::string();
  if (method == "GET") res = client.Get(path, headers);
  else if (method == "POST") res = client.Post(path, headers, payload, "application/json");
  else if (method == "DELETE") res = client.Delete(path, headers);
  if (!res) throw std::runtime_error("request to " + c.server + " failed: " + httplib::to_string(res.error()));
  if (res->status >= 400) {
    std::string message = res->body;
    try {
      auto j = json::parse(res->body);
      message = j.value("error", "") + ": " + j.value("message", "");
    } catch (const json::exception&) {
    }
    throw std::runtime_error("HTTP " + std::to_string(res->status) + " " + message);
  }
  if (raw) {
    *raw = res->body;
    return nullptr;
  }
  return res->body.empty() ? json(nullptr) : json::parse(res->body);
}

void print_fill_table(const FillReport& r) {
  std::cout << std::left << std::setw(12) << "NODE" << "ADMITTED\n";
  for (const auto& [node, n] : r.per_node) std::cout << std::setw(12) << node << n << "\n";
  std::cout << std::setw(12) << "total" << r.admitted << "\n" << std::setw(12) << "rejected" << r.rejected << "\n";
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbenchctl - multi-tenant workspace control plane"};
  app.require_subcommand(1);
  ClientOptions client;
  if (const char* t = std::getenv("WORKBENCH_TOKEN")) client.token = t;
  if (const char* s = std::getenv("WORKBENCH_SERVER")) client.server = s;
  auto add_client_flags = [&client](CLI::App* sub) {
    sub->add_option("--server", client.server, "Control plane URL");
    sub->add_option("--token", client.token, "Bearer token (or WORKBENCH_TOKEN)");
    sub->add_flag("--insecure", client.insecure, "Skip TLS certificate verification");
  };

  // capacity
  auto* capacity = app.add_subcommand("capacity", "Capacity planning");
  capacity->require_subcommand(1);
  std::int64_t plan_servers = 0;
  auto* plan = capacity->add_subcommand("plan", "Projected RAM and CPU for N servers");
  plan->add_option("servers", plan_servers, "Number of workspace servers")->required()->check(CLI::NonNegativeNumber);

  std::int64_t sim_nodes = 4, sim_node_mem = 30720, sim_node_mc = 8000, sim_reserve = 2048, sim_reserve_mc = 100,
               sim_attempts = 46;
  auto* simulate = capacity->add_subcommand("simulate", "Fill a simulated cluster with identical servers");
  simulate->add_option("--nodes", sim_nodes, "Node count")->check(CLI::NonNegativeNumber);
  simulate->add_option("--node-mem-mib", sim_node_mem, "Node memory capacity");
  simulate->add_option("--node-millicores", sim_node_mc, "Node CPU capacity");
  simulate->add_option("--reserve-mib", sim_reserve, "Memory per server");
  simulate->add_option("--reserve-millicores", sim_reserve_mc, "CPU per server");
  simulate->add_option("--attempts", sim_attempts, "Placement attempts")->check(CLI::NonNegativeNumber);

  // login
  std::string login_user, login_password;
  auto* login = app.add_subcommand("login", "Exchange user id and password for a token");
  add_client_flags(login);
  login->add_option("--user", login_user)->required();
  login->add_option("--password", login_password);

  // workspace
  auto* workspace = app.add_subcommand("workspace", "Start, stop and inspect workspaces");
  workspace->require_subcommand(1);
  std::string ws_project, ws_user;
  std::optional<std::int64_t> ws_mem, ws_cpu;
  auto ws_cmd = [&](const char* name, const char* help) {
    auto* sub = workspace->add_subcommand(name, help);
    add_client_flags(sub);
    sub->add_option("--project", ws_project)->required();
    sub->add_option("--user", ws_user)->required();
    return sub;
  };
  auto* ws_start = ws_cmd("start", "Start a workspace");
  ws_start->add_option("--memory-mib", ws_mem, "Memory limit");
  ws_start->add_option("--cpu-millicores", ws_cpu, "CPU limit");
  auto* ws_stop = ws_cmd("stop", "Stop a workspace");
  auto* ws_status = ws_cmd("status", "Show workspace status");

  // logs
  std::string logs_project, logs_user;
  bool logs_follow = false;
  auto* logs = app.add_subcommand("logs", "Query tenant logs");
  add_client_flags(logs);
  logs->add_option("--project", logs_project)->required();
  logs->add_option("--user", logs_user);
  logs->add_flag("--follow,-f", logs_follow, "Keep polling for new entries");

  // serve
  std::string serve_listen = "127.0.0.1:8080", serve_cert, serve_key, serve_range, serve_config, serve_console,
              serve_data;
  std::vector<std::string> serve_nodes, serve_users;
  auto* serve = app.add_subcommand("serve", "Run the control plane");
  serve->add_option("--listen", serve_listen, "host:port");
  serve->add_option("--tls-cert", serve_cert);
  serve->add_option("--tls-key", serve_key);
  serve->add_option("--nodeport-range", serve_range, "LOW-HIGH");
  serve->add_option("--config", serve_config, "JSON configuration file");
  serve->add_option("--console-dir", serve_console, "Static files served under /console/");
  serve->add_option("--data-dir", serve_data);
  serve->add_option("--node", serve_nodes, "id:mem_mib:millicores (repeatable)");
  serve->add_option("--user", serve_users, "user:password[:admin] (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      auto p = plan_capacity(plan_servers);
      std::cout << to_json(p).dump() << "\n";
      std::cout << "servers  ram_gb  cpus\n"
                << std::left << std::setw(9) << p.servers << std::setw(8) << p.required_ram_gb << p.min_cpus << "\n";
    } else if (simulate->parsed()) {
      std::vector<NodeState> nodes;
      for (std::int64_t i = 1; i <= sim_nodes; ++i)
        nodes.push_back({node_with_default_overhead("node-" + std::to_string(i), Mebibytes{sim_node_mem},
                                                    Millicores{sim_node_mc}),
                         {}});
      auto report = simulate_fill(nodes, {"fill", Mebibytes{sim_reserve}, Millicores{sim_reserve_mc}}, sim_attempts);
      std::cout << to_json(report).dump() << "\n";
      print_fill_table(report);
    } else if (login->parsed()) {
      json body{{"user", login_user}, {"password", login_password}};
      std::cout << call(client, "POST", "/api/login", &body).at("token").get<std::string>() << "\n";
    } else if (ws_start->parsed()) {
      json body{{"user", ws_user}};
      if (ws_mem) body["memory_limit_mib"] = *ws_mem;
      if (ws_cpu) body["cpu_millicores"] = *ws_cpu;
      std::cout << call(client, "POST", "/api/projects/" + ws_project + "/workspaces", &body).dump(2) << "\n";
    } else if (ws_stop->parsed()) {
      std::cout << call(client, "DELETE", "/api/projects/" + ws_project + "/workspaces/" + ws_user).dump(2) << "\n";
    } else if (ws_status->parsed()) {
      std::cout << call(client, "GET", "/api/projects/" + ws_project + "/workspaces/" + ws_user).dump(2) << "\n";
    } else if (logs->parsed()) {
      std::set<std::uint64_t> seen;
      std::string from;
      do {
        std::string path = "/api/projects/" + logs_project + "/logs?user=" + logs_user;
        if (!from.empty()) path += "&from=" + from;
        std::string raw;
        call(client, "GET", path, nullptr, &raw);
        std::istringstream lines(raw);
        for (std::string line; std::getline(lines, line);) {
          if (line.empty()) continue;
          auto e = json::parse(line);
          if (!seen.insert(e["seq"].get<std::uint64_t>()).second) continue;
          std::cout << e["timestamp"].get<std::string>() << " " << e["user"].get<std::string>() << " "
                    << e["level"].get<std::string>() << " " << e["message"].get<std::string>() << "\n";
          from = e["timestamp"].get<std::string>();
        }
        std::cout.flush();
        if (logs_follow) std::this_thread::sleep_for(std::chrono::seconds(1));
      } while (logs_follow);
    } else if (serve->parsed()) {
      ControlPlaneConfig cfg;
      ServerOptions opts;
      if (!serve_config.empty()) {
        cfg = load_config(serve_config);
        opts = load_server_options(serve_config);
      }
      if (serve->count("--listen") || serve_config.empty()) parse_listen(serve_listen, opts);
      if (!serve_cert.empty()) opts.tls_cert = serve_cert;
      if (!serve_key.empty()) opts.tls_key = serve_key;
      if (opts.tls_cert.empty() != opts.tls_key.empty())
        throw Error(ErrorCode::InvalidConfig, "--tls-cert and --tls-key must be given together");
      if (!serve_console.empty()) opts.console_dir = serve_console;
      if (!serve_data.empty()) cfg.data_dir = serve_data;
      if (!serve_range.empty()) std::tie(cfg.nodeport_range_start, cfg.nodeport_range_end) = parse_nodeport_range(serve_range);
      for (const auto& n : serve_nodes) {
        std::vector<std::string> parts;
        std::istringstream in(n);
        for (std::string part; std::getline(in, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "--node expects id:mem_mib:millicores");
        cfg.nodes.push_back(node_with_default_overhead(parts[0], Mebibytes{std::stoll(parts[1])},
                                                       Millicores{std::stoll(parts[2])}));
      }
      for (const auto& u : serve_users) {
        std::vector<std::string> parts;
        std::istringstream in(u);
        for (std::string part; std::getline(in, part, ':');) parts.push_back(part);
        if (parts.size() < 2) throw Error(ErrorCode::InvalidArgument, "--user expects user:password[:admin]");
        cfg.users.push_back({parts[0], parts[1], parts.size() > 2 && parts[2] == "admin"});
      }
      ControlPlane plane(std::move(cfg));
      ApiServer server(plane, opts);
      int port = server.start();
      std::cerr << "listening on " << (server.tls() ? "https://" : "http://") << opts.host << ":" << port << "\n";
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      server.stop();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
