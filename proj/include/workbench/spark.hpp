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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "workbench/tenancy.hpp"
#include "workbench/token.hpp"
#include "workbench/types.hpp"

namespace workbench {

inline constexpr std::string_view kHopsworksMethod = "hopsworks";

struct SparkSessionConfig {
  std::string livy_url = "http://livy:8998";
  std::string method = std::string(kHopsworksMethod);
  std::string driver_memory = "2g";
  std::int64_t driver_cores = 1;
  std::string executor_memory = "4g";
  std::int64_t executor_cores = 2;
  std::int64_t num_executors = 2;
  friend bool operator==(const SparkSessionConfig&, const SparkSessionConfig&) = default;
};

// Throws InvalidConfig naming the first offending field.
void validate(const SparkSessionConfig& cfg);

bool is_valid_size_string(std::string_view size) noexcept;
// "512m" -> 512, "2g" -> 2048.
Mebibytes size_to_mebibytes(std::string_view size);

// The workspace's config.yml: a "default:" section holding the seven keys
// in a fixed order, two-space indent, strings double-quoted.
std::string render_config_yml(const SparkSessionConfig& cfg);

// Accepts any key order and extra whitespace. Unknown or duplicate keys are
// a ParseError carrying the line number; missing or invalid values are an
// InvalidConfig naming the field.
SparkSessionConfig parse_config_yml(std::string_view text);

// Closest known config.yml key for a misspelling, if one is close enough.
std::optional<std::string> suggest_config_key(std::string_view unknown);

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Integer/float arithmetic with + - * / and parentheses. Integer operands
// stay integral unless a division is inexact. Throws EvaluationError.
std::string evaluate_statement(std::string_view code);

enum class SessionState { not_started, starting, idle, busy, dead };
enum class StatementState { waiting, running, available, error };

std::string_view to_string(SessionState state) noexcept;
std::string_view to_string(StatementState state) noexcept;
bool is_legal_transition(SessionState from, SessionState to) noexcept;

using SessionId = std::int64_t;
using StatementId = std::int64_t;

struct Statement {
  StatementId id = 0;
  std::string code;
  StatementState state = StatementState::waiting;
  std::optional<std::string> output;  // set iff available or error
};

struct Session {
  SessionId id = 0;
  ProjectUser owner;
  SessionState state = SessionState::not_started;
  SparkSessionConfig config;
  std::vector<Statement> statements;
};

struct SessionTransition {
  SessionId session = 0;
  SessionState from;
  SessionState to;
};

struct GatewayBudget {
  Mebibytes memory{65536};
  std::int64_t cores = 32;
};

struct GatewayOptions {
  GatewayBudget budget;
  std::chrono::milliseconds startup_delay{20};
  std::chrono::milliseconds statement_delay{0};  // simulated execution time
};

// Livy-style session service. Sessions are owned by the (project, user) of
// the workspace token that created them. Startup and statement execution
// run on a background worker; within a session, statements run one at a
// time.
class SparkGateway {
 public:
  SparkGateway(const TokenRegistry& tokens, const Tenancy& tenancy, GatewayOptions options = {});
  ~SparkGateway();
  SparkGateway(const SparkGateway&) = delete;
  SparkGateway& operator=(const SparkGateway&) = delete;

  Session connect(const SparkSessionConfig& cfg, const std::string& token);
  Session session(SessionId id, const std::string& token) const;
  Statement submit_statement(SessionId id, const std::string& code, const std::string& token);
  Statement statement(SessionId id, StatementId sid, const std::string& token) const;
  void close_session(SessionId id, const std::string& token);

  // Blocks until the session reaches `state` or the timeout expires.
  bool wait_for_state(SessionId id, SessionState state, std::chrono::milliseconds timeout) const;
  // Blocks until the statement is available or error.
  std::optional<Statement> wait_for_statement(SessionId id, StatementId sid,
                                              std::chrono::milliseconds timeout) const;

  std::vector<SessionTransition> transitions() const;

 private:
  struct Job {
    std::chrono::steady_clock::time_point due;
    std::function<void()> run;
  };

  TokenBinding authenticate(const std::string& token) const;
  Session& owned_session(SessionId id, const TokenBinding& who);
  const Session& owned_session(SessionId id, const TokenBinding& who) const;
  void transition(Session& s, SessionState to);
  void schedule(std::chrono::milliseconds delay, std::function<void()> run);
  void worker_loop();
  void release_budget(const Session& s);

  const TokenRegistry& tokens_;
  const Tenancy& tenancy_;
  GatewayOptions options_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<SessionId, Session> sessions_;
  std::vector<SessionTransition> transitions_;
  SessionId next_session_ = 1;
  Mebibytes used_memory_{0};
  std::int64_t used_cores_ = 0;

  std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::deque<Job> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace workbench
