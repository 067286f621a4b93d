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

#include "workbench/control_plane.hpp"

#include <stdlib.h>

#include <charconv>
#include <fstream>

#include "httplib.h"
#include "json.hpp"
#include "workbench/codec.hpp"
#include "workbench/error.hpp"

namespace workbench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- users ---------------------------------------------------------------

void UserDirectory::add_user(UserAccount account) {
  if (!is_valid_user_id(account.user)) throw Error(ErrorCode::InvalidName, "invalid user id: " + account.user);
  std::lock_guard lock(mutex_);
  auto user = account.user;
  accounts_[user] = std::move(account);
}

std::optional<std::string> UserDirectory::login(const UserId& user, const std::string& password) {
  {
    std::lock_guard lock(mutex_);
    auto it = accounts_.find(user);
    if (it == accounts_.end() || it->second.password != password) return std::nullopt;
  }
  return issue_session(user);
}

std::string UserDirectory::issue_session(const UserId& user) {
  auto token = "ust_" + generate_workspace_token().substr(kWorkspaceTokenPrefix.size());
  std::lock_guard lock(mutex_);
  sessions_[token] = user;
  return token;
}

std::optional<UserId> UserDirectory::authenticate(const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

bool UserDirectory::is_admin(const UserId& user) const {
  std::lock_guard lock(mutex_);
  auto it = accounts_.find(user);
  return it != accounts_.end() && it->second.admin;
}

// ---- configuration -------------------------------------------------------

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, "invalid " + std::string(what) + ": " + std::string(text));
  return value;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

NodeSpec node_from_json(const json& j) {
  auto id = j.at("id").get<std::string>();
  Mebibytes mem{j.at("capacity_mem_mib").get<std::int64_t>()};
  Millicores cpu{j.at("capacity_millicores").get<std::int64_t>()};
  auto spec = node_with_default_overhead(id, mem, cpu);
  if (j.contains("allocatable_mem_mib")) spec.allocatable_mem = Mebibytes{j["allocatable_mem_mib"].get<std::int64_t>()};
  if (j.contains("allocatable_millicores"))
    spec.allocatable_cpu = Millicores{j["allocatable_millicores"].get<std::int64_t>()};
  return spec;
}

}  // namespace

std::pair<Port, Port> parse_nodeport_range(std::string_view text) {
  auto dash = text.find('-');
  if (dash == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "node-port range must be LOW-HIGH");
  auto lo = parse_number<unsigned>(text.substr(0, dash), "node-port range");
  auto hi = parse_number<unsigned>(text.substr(dash + 1), "node-port range");
  if (lo == 0 || hi > 65535 || lo > hi) throw Error(ErrorCode::InvalidArgument, "invalid node-port range");
  return {Port(lo), Port(hi)};
}

void parse_listen(std::string_view text, ServerOptions& out) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    out.port = parse_number<int>(text, "listen port");
  } else {
    if (colon > 0) out.host = std::string(text.substr(0, colon));
    out.port = parse_number<int>(text.substr(colon + 1), "listen port");
  }
  if (out.port < 0 || out.port > 65535) throw Error(ErrorCode::InvalidArgument, "listen port out of range");
}

ControlPlaneConfig load_config(const fs::path& path) {
  auto j = read_json_file(path);
  ControlPlaneConfig cfg;
  try {
    if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("nodeport_range"))
      std::tie(cfg.nodeport_range_start, cfg.nodeport_range_end) =
          parse_nodeport_range(j["nodeport_range"].get<std::string>());
    if (j.contains("deployment_mode")) {
      auto mode = j["deployment_mode"].get<std::string>();
      if (mode == "docker") cfg.workspaces.mode = DeploymentMode::Docker;
      else if (mode == "kubernetes") cfg.workspaces.mode = DeploymentMode::Kubernetes;
      else throw Error(ErrorCode::InvalidConfig, "unknown deployment_mode " + mode);
    }
    if (j.contains("backend_host")) {
      cfg.workspaces.backend_host = j["backend_host"].get<std::string>();
      cfg.driver.bind_host = cfg.workspaces.backend_host;
    }
    if (j.contains("livy_url")) cfg.workspaces.livy_url = j["livy_url"].get<std::string>();
    if (j.contains("enforcement_interval_ms"))
      cfg.driver.enforcement_interval = std::chrono::milliseconds(j["enforcement_interval_ms"].get<std::int64_t>());
    for (const auto& n : j.value("nodes", json::array())) cfg.nodes.push_back(node_from_json(n));
    for (const auto& u : j.value("users", json::array()))
      cfg.users.push_back({u.at("user").get<std::string>(), u.value("password", ""), u.value("admin", false)});
    if (j.contains("gateway")) {
      const auto& g = j["gateway"];
      if (g.contains("memory_mib")) cfg.gateway.budget.memory = Mebibytes{g["memory_mib"].get<std::int64_t>()};
      if (g.contains("cores")) cfg.gateway.budget.cores = g["cores"].get<std::int64_t>();
      if (g.contains("startup_delay_ms"))
        cfg.gateway.startup_delay = std::chrono::milliseconds(g["startup_delay_ms"].get<std::int64_t>());
    }
    if (j.contains("log_max_age_s"))
      cfg.log_max_age = std::chrono::milliseconds(j["log_max_age_s"].get<std::int64_t>() * 1000);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return cfg;
}

ServerOptions load_server_options(const fs::path& path) {
  auto j = read_json_file(path);
  ServerOptions opts;
  try {
    if (j.contains("listen")) parse_listen(j["listen"].get<std::string>(), opts);
    opts.tls_cert = j.value("tls_cert", "");
    opts.tls_key = j.value("tls_key", "");
    opts.console_dir = j.value("console_dir", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return opts;
}

// ---- control plane -------------------------------------------------------

namespace {

ControlPlaneConfig with_data_dir(ControlPlaneConfig cfg) {
  if (cfg.data_dir.empty()) {
    auto pattern = (fs::temp_directory_path() / "workbench-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw Error(ErrorCode::Internal, "cannot create data directory");
    cfg.data_dir = pattern;
  }
  fs::create_directories(cfg.data_dir);
  return cfg;
}

LogStoreOptions log_options(const ControlPlaneConfig& cfg) {
  LogStoreOptions o;
  o.dir = cfg.data_dir / "logs";
  o.max_age = cfg.log_max_age;
  return o;
}

}  // namespace

ControlPlane::ControlPlane(ControlPlaneConfig config, std::unique_ptr<BackendDriver> backend)
    : owns_data_dir_(config.data_dir.empty()),
      config_(with_data_dir(std::move(config))),
      fs(tenancy, config_.data_dir / "fs"),
      ports(config_.nodeport_range_start, config_.nodeport_range_end),
      proxy(ports),
      logs(tenancy, log_options(config_)),
      driver(backend ? std::move(backend) : std::make_unique<SimDriver>(config_.driver)),
      gateway(tokens, tenancy, config_.gateway),
      workspaces(tenancy, cluster, proxy, fs, *driver, logs, tokens, config_.workspaces) {
  for (const auto& node : config_.nodes) cluster.register_node(node);
  for (const auto& user : config_.users) users.add_user(user);
}

ControlPlane::~ControlPlane() {
  // Stop every live workspace so backend servers shut down before the
  // members they reference are destroyed.
  for (const auto& w : workspaces.instances()) {
    if (w.state != WorkspaceState::Running) continue;
    try {
      workspaces.stop_workspace(w.project, w.user, w.user);
    } catch (const std::exception&) {
    }
  }
  if (owns_data_dir_) {
    std::error_code ec;
    fs::remove_all(config_.data_dir, ec);
  }
}

// ---- REST server ---------------------------------------------------------

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"error", std::string(to_string(code))}, {"message", message}});
}

std::optional<std::string> bearer(const httplib::Request& req) {
  Headers headers;
  for (const auto& [k, v] : req.headers) headers.emplace(k, v);
  return extract_token(headers);
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidArgument, std::string("missing field ") + key);
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("wrong type for field ") + key);
  }
}

std::optional<Timestamp> query_time(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  auto text = req.get_param_value(key);
  if (text.empty()) return std::nullopt;
  auto ts = parse_timestamp(text);
  if (!ts) throw Error(ErrorCode::InvalidArgument, std::string("invalid timestamp for ") + key);
  return ts;
}

}  // namespace

struct ApiServer::Impl {
  std::unique_ptr<httplib::Server> server;
};

ApiServer::ApiServer(ControlPlane& plane, ServerOptions options)
    : plane_(plane), options_(std::move(options)), impl_(std::make_unique<Impl>()) {
  if (tls()) {
    impl_->server = std::make_unique<httplib::SSLServer>(options_.tls_cert.c_str(), options_.tls_key.c_str());
    if (!static_cast<httplib::SSLServer&>(*impl_->server).is_valid())
      throw Error(ErrorCode::InvalidConfig, "cannot load TLS certificate or key");
  } else {
    impl_->server = std::make_unique<httplib::Server>();
  }
  auto& srv = *impl_->server;
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  // Every handler runs through `guarded` so domain errors become JSON.
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  auto guarded = [](Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const EvaluationError& e) {
        send_error(res, ErrorCode::InvalidArgument, e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::Internal, e.what());
      }
    };
  };
  ControlPlane& cp = plane_;
  auto actor = [&cp](const httplib::Request& req) -> UserId {
    auto token = bearer(req);
    if (!token) throw Error(ErrorCode::Unauthorized, "missing bearer token");
    auto user = cp.users.authenticate(*token);
    if (!user) throw Error(ErrorCode::Unauthorized, "invalid token");
    return *user;
  };
  auto gateway_token = [](const httplib::Request& req) -> std::string {
    auto token = bearer(req);
    if (!token) throw Error(ErrorCode::Unauthorized, "missing bearer token");
    return *token;
  };

  srv.Post("/api/login", guarded([&cp](const httplib::Request& req, httplib::Response& res) {
             auto body = body_json(req);
             auto token = cp.users.login(field<std::string>(body, "user"), body.value("password", ""));
             if (!token) throw Error(ErrorCode::Unauthorized, "bad credentials");
             send_json(res, 200, {{"token", *token}, {"user", body["user"]}});
           }));

  // ---- tenancy
  srv.Post("/api/projects", guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             auto body = body_json(req);
             send_json(res, 201, to_json(cp.tenancy.create_project(field<std::string>(body, "name"), who)));
           }));
  srv.Get(R"(/api/projects/([^/]+))", guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
            auto who = actor(req);
            const auto& p = req.matches[1].str();
            auto project = cp.tenancy.project(p);
            if (!project) throw Error(ErrorCode::NoSuchProject, "no such project: " + p);
            if (!cp.tenancy.role_of(p, who)) throw Error(ErrorCode::Forbidden, who + " is not a member of " + p);
            auto j = to_json(*project);
            j["members"] = json::array();
            for (const auto& m : cp.tenancy.members(p)) j["members"].push_back(to_json(m));
            j["shares_in"] = json::array();
            for (const auto& s : cp.tenancy.shares_into(p)) j["shares_in"].push_back(to_json(s));
            send_json(res, 200, j);
          }));
  srv.Post(R"(/api/projects/([^/]+)/members)",
           guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             auto body = body_json(req);
             auto role = parse_role(body.value("role", "DataScientist"));
             if (!role) throw Error(ErrorCode::InvalidArgument, "unknown role");
             send_json(res, 201,
                       to_json(cp.tenancy.add_member(req.matches[1].str(), field<std::string>(body, "user"), *role, who)));
           }));
  srv.Post(R"(/api/projects/([^/]+)/datasets)",
           guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             auto body = body_json(req);
             auto name = field<std::string>(body, "name");
             cp.tenancy.create_dataset(req.matches[1].str(), name, who);
             send_json(res, 201, {{"project", req.matches[1].str()}, {"name", name}});
           }));
  srv.Delete(R"(/api/projects/([^/]+)/datasets/([^/]+))",
             guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
               cp.tenancy.delete_dataset(req.matches[1].str(), req.matches[2].str(), actor(req));
               res.status = 204;
             }));
  srv.Post(R"(/api/projects/([^/]+)/datasets/([^/]+)/shares)",
           guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             auto body = body_json(req);
             auto target = body.contains("target_project") ? field<std::string>(body, "target_project")
                                                           : field<std::string>(body, "target");
             auto perm = parse_permission(body.value("permission", "ReadOnly"));
             if (!perm) throw Error(ErrorCode::InvalidArgument, "unknown permission");
             send_json(res, 201,
                       to_json(cp.tenancy.share_dataset(req.matches[1].str(), req.matches[2].str(), target, *perm, who)));
           }));
  srv.Delete(R"(/api/projects/([^/]+)/datasets/([^/]+)/shares/([^/]+))",
             guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
               cp.tenancy.revoke_share(req.matches[1].str(), req.matches[2].str(), req.matches[3].str(), actor(req));
               res.status = 204;
             }));

  // ---- workspaces
  srv.Post(R"(/api/projects/([^/]+)/workspaces)",
           guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             auto body = body_json(req);
             WorkspaceRequest wr;
             wr.project = req.matches[1].str();
             wr.user = body.value("user", who);
             if (body.contains("memory_limit_mib"))
               wr.memory_limit = Mebibytes{field<std::int64_t>(body, "memory_limit_mib")};
             if (body.contains("cpu_millicores")) wr.cpu_limit = Millicores{field<std::int64_t>(body, "cpu_millicores")};
             if (body.contains("spark")) wr.spark = spark_config_from_json(body["spark"]);
             auto w = cp.workspaces.start_workspace(wr, who);
             send_json(res, 201, to_json(w, w.user == who));
           }));
  srv.Get(R"(/api/projects/([^/]+)/workspaces/([^/]+))",
          guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
            auto who = actor(req);
            const auto p = req.matches[1].str();
            if (!cp.tenancy.role_of(p, who)) {
              if (!cp.tenancy.project_exists(p)) throw Error(ErrorCode::NoSuchProject, "no such project: " + p);
              throw Error(ErrorCode::Forbidden, who + " is not a member of " + p);
            }
            auto w = cp.workspaces.workspace_status(p, req.matches[2].str());
            send_json(res, 200, to_json(w, w.user == who));
          }));
  srv.Delete(R"(/api/projects/([^/]+)/workspaces/([^/]+))",
             guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
               auto who = actor(req);
               send_json(res, 200, to_json(cp.workspaces.stop_workspace(req.matches[1].str(), req.matches[2].str(), who), false));
             }));

  // ---- cluster
  srv.Get("/api/cluster/nodes", guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
            actor(req);
            json out = json::array();
            for (const auto& n : cp.cluster.nodes()) out.push_back(to_json(n));
            send_json(res, 200, out);
          }));
  srv.Post("/api/cluster/nodes", guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
             auto who = actor(req);
             if (!cp.users.is_admin(who)) throw Error(ErrorCode::Forbidden, "node registration requires an administrator");
             NodeSpec spec;
             try {
               spec = node_from_json(body_json(req));
             } catch (const json::exception& e) {
               throw Error(ErrorCode::InvalidArgument, e.what());
             }
             send_json(res, 201, to_json(cp.cluster.register_node(spec)));
           }));
  srv.Get("/api/cluster/capacity-plan", guarded([actor](const httplib::Request& req, httplib::Response& res) {
            actor(req);
            if (!req.has_param("servers")) throw Error(ErrorCode::InvalidArgument, "missing servers parameter");
            auto n = parse_number<std::int64_t>(req.get_param_value("servers"), "servers");
            send_json(res, 200, to_json(plan_capacity(n)));
          }));

  // ---- project filesystem
  // Accepts a user session token or the workspace token of a workspace
  // in the same project; both resolve to the same project-scoped view.
  auto fs_view = [&cp](const httplib::Request& req) -> MountView {
    auto token = bearer(req);
    if (!token) throw Error(ErrorCode::Unauthorized, "missing bearer token");
    const auto p = req.matches[1].str();
    if (auto user = cp.users.authenticate(*token)) return cp.fs.mount_view(p, *user);
    if (auto binding = cp.tokens.resolve(*token)) {
      if (binding->project != p) throw Error(ErrorCode::Forbidden, "workspace token belongs to another project");
      return cp.fs.mount_view(p, binding->user);
    }
    throw Error(ErrorCode::Unauthorized, "invalid token");
  };
  srv.Get(R"(/api/projects/([^/]+)/fs(/.*)?)", guarded([&cp, fs_view](const httplib::Request& req, httplib::Response& res) {
            auto view = fs_view(req);
            auto path = req.matches[2].matched ? req.matches[2].str() : std::string("/");
            auto full = view.root + (path == "/" ? "" : path);
            if (req.has_param("list") || path == "/" || path.back() == '/') {
              json out = json::array();
              for (const auto& e : cp.fs.list(view, full))
                out.push_back({{"name", e.name}, {"is_dir", e.is_dir}, {"size", e.size}});
              send_json(res, 200, out);
              return;
            }
            res.status = 200;
            res.set_content(cp.fs.read(view, full), "application/octet-stream");
          }));
  srv.Put(R"(/api/projects/([^/]+)/fs(/.+))", guarded([&cp, fs_view](const httplib::Request& req, httplib::Response& res) {
            auto view = fs_view(req);
            auto full = view.root + req.matches[2].str();
            if (req.has_param("mkdir")) cp.fs.mkdir(view, full);
            else cp.fs.write(view, full, req.body);
            res.status = 204;
          }));

  // ---- logs
  srv.Get(R"(/api/projects/([^/]+)/logs)", guarded([&cp, actor](const httplib::Request& req, httplib::Response& res) {
            auto who = actor(req);
            LogQuery q;
            q.project = req.matches[1].str();
            if (req.has_param("user") && !req.get_param_value("user").empty()) q.user = req.get_param_value("user");
            q.from = query_time(req, "from");
            q.to = query_time(req, "to");
            if (req.has_param("limit") && !req.get_param_value("limit").empty())
              q.limit = parse_number<std::size_t>(req.get_param_value("limit"), "limit");
            std::string out;
            for (const auto& e : cp.logs.query(q, who)) {
              out += to_json(e).dump();
              out += '\n';
            }
            res.status = 200;
            res.set_content(out, "application/x-ndjson");
          }));

  // ---- spark gateway (workspace tokens only)
  srv.Post("/gateway/sessions", guarded([&cp, gateway_token](const httplib::Request& req, httplib::Response& res) {
             auto token = gateway_token(req);
             auto body = body_json(req);
             SparkSessionConfig cfg;
             if (body.contains("config_yml")) {
               if (!body["config_yml"].is_string()) throw Error(ErrorCode::InvalidConfig, "config_yml must be a string");
               cfg = parse_config_yml(body["config_yml"].get<std::string>());
             } else {
               cfg = spark_config_from_json(body);
             }
             send_json(res, 201, to_json(cp.gateway.connect(cfg, token)));
           }));
  auto session_id = [](const httplib::Request& req, int idx) {
    return parse_number<std::int64_t>(req.matches[idx].str(), "id");
  };
  srv.Get(R"(/gateway/sessions/(\d+))", guarded([&cp, gateway_token, session_id](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(cp.gateway.session(session_id(req, 1), gateway_token(req))));
          }));
  srv.Delete(R"(/gateway/sessions/(\d+))", guarded([&cp, gateway_token, session_id](const httplib::Request& req, httplib::Response& res) {
               cp.gateway.close_session(session_id(req, 1), gateway_token(req));
               send_json(res, 200, {{"msg", "deleted"}});
             }));
  srv.Post(R"(/gateway/sessions/(\d+)/statements)",
           guarded([&cp, gateway_token, session_id](const httplib::Request& req, httplib::Response& res) {
             auto token = gateway_token(req);
             auto body = body_json(req);
             send_json(res, 201, to_json(cp.gateway.submit_statement(session_id(req, 1), field<std::string>(body, "code"), token)));
           }));
  srv.Get(R"(/gateway/sessions/(\d+)/statements/(\d+))",
          guarded([&cp, gateway_token, session_id](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(cp.gateway.statement(session_id(req, 1), session_id(req, 2), gateway_token(req))));
          }));

  // ---- reverse proxy
  auto forward = guarded([&cp](const httplib::Request& req, httplib::Response& res) {
    ProxyRequest pr;
    pr.method = req.method;
    auto q = req.target.find('?');
    pr.path = req.target.substr(0, q);
    if (q != std::string::npos) pr.query = req.target.substr(q + 1);
    for (const auto& [k, v] : req.headers) {
      if (k == "REMOTE_ADDR" || k == "REMOTE_PORT" || k == "LOCAL_ADDR" || k == "LOCAL_PORT") continue;
      pr.headers.emplace(k, v);
    }
    pr.body = req.body;
    auto out = cp.proxy.resolve_and_forward(pr);
    res.status = out.status;
    std::string content_type = "text/plain";
    for (const auto& [k, v] : out.headers) {
      std::string lower = k;
      for (auto& c : lower) c = char(std::tolower(static_cast<unsigned char>(c)));
      if (lower == "content-type") content_type = v;
      else if (lower != "content-length" && !is_hop_by_hop_header(k)) res.set_header(k, v);
    }
    res.set_content(out.body, content_type);
  });
  const char* kWorkspacePattern = R"(/workspace/.*)";
  srv.Get(kWorkspacePattern, forward);
  srv.Post(kWorkspacePattern, forward);
  srv.Put(kWorkspacePattern, forward);
  srv.Patch(kWorkspacePattern, forward);
  srv.Delete(kWorkspacePattern, forward);
  srv.Options(kWorkspacePattern, forward);

  if (!options_.console_dir.empty() && !srv.set_mount_point("/console", options_.console_dir))
    throw Error(ErrorCode::InvalidConfig, "console directory does not exist: " + options_.console_dir);

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) send_error(res, ErrorCode::NotFound, "no such endpoint");
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start() {
  auto& srv = *impl_->server;
  if (options_.port == 0) {
    bound_port_ = srv.bind_to_any_port(options_.host);
  } else {
    bound_port_ = srv.bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (bound_port_ <= 0)
    throw Error(ErrorCode::PortInUse, "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  thread_ = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound_port_;
}

void ApiServer::run() {
  if (bound_port_ == 0) start();
  if (thread_.joinable()) thread_.join();
}

void ApiServer::stop() {
  if (impl_ && impl_->server) impl_->server->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace workbench
