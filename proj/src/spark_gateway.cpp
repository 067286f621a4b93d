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

#include <algorithm>
#include <utility>

#include "workbench/error.hpp"
#include "workbench/spark.hpp"

namespace workbench {

std::string_view to_string(SessionState state) noexcept {
  switch (state) {
    case SessionState::not_started: return "not_started";
    case SessionState::starting: return "starting";
    case SessionState::idle: return "idle";
    case SessionState::busy: return "busy";
    case SessionState::dead: return "dead";
  }
  return "dead";
}

std::string_view to_string(StatementState state) noexcept {
  switch (state) {
    case StatementState::waiting: return "waiting";
    case StatementState::running: return "running";
    case StatementState::available: return "available";
    case StatementState::error: return "error";
  }
  return "error";
}

bool is_legal_transition(SessionState from, SessionState to) noexcept {
  using S = SessionState;
  if (from == S::dead) return false;
  if (to == S::dead) return true;
  return (from == S::not_started && to == S::starting) || (from == S::starting && to == S::idle) ||
         (from == S::idle && to == S::busy) || (from == S::busy && to == S::idle);
}

SparkGateway::SparkGateway(const TokenRegistry& tokens, const Tenancy& tenancy, GatewayOptions options)
    : tokens_(tokens), tenancy_(tenancy), options_(options) {
  worker_ = std::thread([this] { worker_loop(); });
}

SparkGateway::~SparkGateway() {
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  worker_.join();
}

void SparkGateway::schedule(std::chrono::milliseconds delay, std::function<void()> run) {
  Job job{std::chrono::steady_clock::now() + delay, std::move(run)};
  {
    std::lock_guard lock(jobs_mutex_);
    auto pos = std::upper_bound(jobs_.begin(), jobs_.end(), job.due,
                                [](auto due, const Job& j) { return due < j.due; });
    jobs_.insert(pos, std::move(job));
  }
  jobs_cv_.notify_all();
}

void SparkGateway::worker_loop() {
  std::unique_lock lock(jobs_mutex_);
  while (true) {
    if (stopping_) return;
    if (jobs_.empty()) {
      jobs_cv_.wait(lock);
      continue;
    }
    auto due = jobs_.front().due;
    if (std::chrono::steady_clock::now() < due) {
      jobs_cv_.wait_until(lock, due);
      continue;
    }
    auto job = std::move(jobs_.front());
    jobs_.pop_front();
    lock.unlock();
    job.run();
    lock.lock();
  }
}

TokenBinding SparkGateway::authenticate(const std::string& token) const {
  auto binding = tokens_.resolve(token);
  if (!binding) throw Error(ErrorCode::Unauthorized, "token is not valid for any live workspace");
  return *binding;
}

Session& SparkGateway::owned_session(SessionId id, const TokenBinding& who) {
  return const_cast<Session&>(std::as_const(*this).owned_session(id, who));
}

const Session& SparkGateway::owned_session(SessionId id, const TokenBinding& who) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NoSuchSession, "no such session: " + std::to_string(id));
  if (it->second.owner != ProjectUser{who.project, who.user}) {
    throw Error(ErrorCode::Unauthorized, "session belongs to another workspace");
  }
  return it->second;
}

void SparkGateway::transition(Session& s, SessionState to) {
  transitions_.push_back({s.id, s.state, to});
  s.state = to;
  changed_.notify_all();
}

void SparkGateway::release_budget(const Session& s) {
  used_memory_ -= size_to_mebibytes(s.config.driver_memory);
  used_memory_ -= Mebibytes{size_to_mebibytes(s.config.executor_memory).value() * s.config.num_executors};
  used_cores_ -= s.config.driver_cores + s.config.num_executors * s.config.executor_cores;
}

Session SparkGateway::connect(const SparkSessionConfig& cfg, const std::string& token) {
  auto who = authenticate(token);
  validate(cfg);
  if (cfg.method != kHopsworksMethod) {
    throw Error(ErrorCode::MethodUnsupported, "method '" + cfg.method + "' is not served by the gateway; use \"hopsworks\"");
  }
  // Saturating arithmetic so absurd executor counts are denied, not wrapped.
  auto mem = size_to_mebibytes(cfg.driver_memory).value();
  auto exec_mem = size_to_mebibytes(cfg.executor_memory).value();
  std::int64_t total_mem = 0, total_cores = 0, tmp = 0;
  bool overflow = __builtin_mul_overflow(exec_mem, cfg.num_executors, &tmp) ||
                  __builtin_add_overflow(mem, tmp, &total_mem) ||
                  __builtin_mul_overflow(cfg.executor_cores, cfg.num_executors, &tmp) ||
                  __builtin_add_overflow(cfg.driver_cores, tmp, &total_cores);

  std::lock_guard lock(mutex_);
  if (overflow || used_memory_.value() + total_mem > options_.budget.memory.value() ||
      used_cores_ + total_cores > options_.budget.cores) {
    throw Error(ErrorCode::ResourceDenied, "session exceeds the gateway resource budget");
  }
  used_memory_ += Mebibytes{total_mem};
  used_cores_ += total_cores;

  Session s;
  s.id = next_session_++;
  s.owner = ProjectUser{who.project, who.user};
  s.config = cfg;
  auto& stored = sessions_.emplace(s.id, std::move(s)).first->second;
  transition(stored, SessionState::starting);
  auto id = stored.id;
  schedule(options_.startup_delay, [this, id] {
    std::lock_guard lock(mutex_);
    auto& s = sessions_.at(id);
    if (s.state == SessionState::starting) transition(s, SessionState::idle);
  });
  return stored;
}

Session SparkGateway::session(SessionId id, const std::string& token) const {
  auto who = authenticate(token);
  std::lock_guard lock(mutex_);
  return owned_session(id, who);
}

Statement SparkGateway::submit_statement(SessionId id, const std::string& code, const std::string& token) {
  auto who = authenticate(token);
  std::lock_guard lock(mutex_);
  auto& s = owned_session(id, who);
  if (s.state == SessionState::dead) throw Error(ErrorCode::SessionDead, "session is dead");
  if (s.state != SessionState::idle) {
    throw Error(ErrorCode::SessionBusy, "session is " + std::string(to_string(s.state)));
  }
  Statement st;
  st.id = static_cast<StatementId>(s.statements.size());
  st.code = code;
  s.statements.push_back(st);
  transition(s, SessionState::busy);
  auto sid = st.id;
  schedule(options_.statement_delay, [this, id, sid] {
    std::string code;
    {
      std::lock_guard lock(mutex_);
      auto& s = sessions_.at(id);
      auto& st = s.statements.at(static_cast<std::size_t>(sid));
      if (s.state == SessionState::dead || st.state != StatementState::waiting) return;
      st.state = StatementState::running;
      code = st.code;
      changed_.notify_all();
    }
    StatementState result_state = StatementState::available;
    std::string output;
    try {
      output = evaluate_statement(code);
    } catch (const EvaluationError& e) {
      result_state = StatementState::error;
      output = e.what();
    }
    std::lock_guard lock(mutex_);
    auto& s = sessions_.at(id);
    auto& st = s.statements.at(static_cast<std::size_t>(sid));
    if (st.state != StatementState::running) return;
    st.state = result_state;
    st.output = std::move(output);
    if (s.state == SessionState::busy) transition(s, SessionState::idle);
    changed_.notify_all();
  });
  return st;
}

Statement SparkGateway::statement(SessionId id, StatementId sid, const std::string& token) const {
  auto who = authenticate(token);
  std::lock_guard lock(mutex_);
  const auto& s = owned_session(id, who);
  if (sid < 0 || static_cast<std::size_t>(sid) >= s.statements.size()) {
    throw Error(ErrorCode::NotFound, "no such statement: " + std::to_string(sid));
  }
  return s.statements[static_cast<std::size_t>(sid)];
}

void SparkGateway::close_session(SessionId id, const std::string& token) {
  auto who = authenticate(token);
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end() || it->second.state == SessionState::dead) {
    throw Error(ErrorCode::NoSuchSession, "no such session: " + std::to_string(id));
  }
  auto& s = it->second;
  bool owner = s.owner == ProjectUser{who.project, who.user};
  bool project_owner = who.project == s.owner.project &&
                       tenancy_.role_of(who.project, who.user) == Role::DataOwner;
  if (!owner && !project_owner) throw Error(ErrorCode::Unauthorized, "not allowed to close this session");
  for (auto& st : s.statements) {
    if (st.state == StatementState::waiting || st.state == StatementState::running) {
      st.state = StatementState::error;
      st.output = "session closed";
    }
  }
  transition(s, SessionState::dead);
  release_budget(s);
}

bool SparkGateway::wait_for_state(SessionId id, SessionState state, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return changed_.wait_for(lock, timeout, [&] {
    auto it = sessions_.find(id);
    return it != sessions_.end() && it->second.state == state;
  });
}

std::optional<Statement> SparkGateway::wait_for_statement(SessionId id, StatementId sid,
                                                          std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  const Statement* found = nullptr;
  bool done = changed_.wait_for(lock, timeout, [&] {
    auto it = sessions_.find(id);
    if (it == sessions_.end() || sid < 0 || static_cast<std::size_t>(sid) >= it->second.statements.size()) return false;
    found = &it->second.statements[static_cast<std::size_t>(sid)];
    return found->state == StatementState::available || found->state == StatementState::error;
  });
  if (!done) return std::nullopt;
  return *found;
}

std::vector<SessionTransition> SparkGateway::transitions() const {
  std::lock_guard lock(mutex_);
  return transitions_;
}

}  // namespace workbench
