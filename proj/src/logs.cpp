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

#include "workbench/logs.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "workbench/error.hpp"

namespace workbench {

std::string_view to_string(LogLevel level) noexcept {
  switch (level) {
    case LogLevel::DEBUG: return "DEBUG";
    case LogLevel::INFO: return "INFO";
    case LogLevel::WARN: return "WARN";
    case LogLevel::ERROR: return "ERROR";
  }
  return "INFO";
}

std::optional<LogLevel> parse_log_level(std::string_view text) noexcept {
  if (text == "DEBUG") return LogLevel::DEBUG;
  if (text == "INFO") return LogLevel::INFO;
  if (text == "WARN") return LogLevel::WARN;
  if (text == "ERROR") return LogLevel::ERROR;
  return std::nullopt;
}

std::optional<LogLine> parse_log_line(std::string_view line) {
  auto sp1 = line.find(' ');
  if (sp1 == std::string_view::npos) return std::nullopt;
  auto ts = parse_timestamp(line.substr(0, sp1));
  if (!ts) return std::nullopt;
  auto sp2 = line.find(' ', sp1 + 1);
  auto level_text = line.substr(sp1 + 1, sp2 == std::string_view::npos ? std::string_view::npos : sp2 - sp1 - 1);
  auto level = parse_log_level(level_text);
  if (!level) return std::nullopt;
  std::string message = sp2 == std::string_view::npos ? std::string() : std::string(line.substr(sp2 + 1));
  return LogLine{*ts, *level, std::move(message)};
}

std::string format_log_line(Timestamp ts, LogLevel level, std::string_view message) {
  std::string out = format_timestamp(ts);
  out.append(" ").append(to_string(level)).append(" ").append(message);
  return out;
}

void LogVolume::append(std::string line) {
  std::lock_guard lock(mutex_);
  lines_.push_back(std::move(line));
}

std::vector<std::string> LogVolume::read_from(std::size_t& cursor) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  if (cursor < lines_.size()) {
    out.assign(lines_.begin() + static_cast<std::ptrdiff_t>(cursor), lines_.end());
    cursor = lines_.size();
  }
  return out;
}

std::size_t LogVolume::size() const {
  std::lock_guard lock(mutex_);
  return lines_.size();
}

LogAggregator::LogAggregator(const Tenancy& tenancy, LogStoreOptions options)
    : tenancy_(tenancy), options_(std::move(options)) {
  if (options_.segment_entries == 0) options_.segment_entries = 1;
  if (options_.dir.empty()) return;
  std::filesystem::create_directories(options_.dir);
  reload();
}

// Rebuilds the in-memory index from segments left by a previous process.
void LogAggregator::reload() {
  std::uint64_t max_seq = 0;
  for (const auto& project_dir : std::filesystem::directory_iterator(options_.dir)) {
    if (!project_dir.is_directory()) continue;
    std::vector<std::filesystem::path> segments;
    for (const auto& f : std::filesystem::directory_iterator(project_dir.path())) {
      if (f.path().extension() == ".jsonl") segments.push_back(f.path());
    }
    if (segments.empty()) continue;
    std::sort(segments.begin(), segments.end());
    auto& log = projects_[project_dir.path().filename().string()];
    for (const auto& path : segments) {
      std::ifstream in(path);
      std::size_t lines = 0;
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        ++lines;
        try {
          auto j = nlohmann::json::parse(line);
          LogEntry e;
          e.timestamp = parse_timestamp(j.at("timestamp").get<std::string>()).value_or(Timestamp{});
          e.project = j.at("project").get<std::string>();
          e.user = j.at("user").get<std::string>();
          e.instance = j.at("instance").get<std::string>();
          e.level = parse_log_level(j.at("level").get<std::string>()).value_or(LogLevel::INFO);
          e.message = j.at("message").get<std::string>();
          e.seq = j.at("seq").get<std::uint64_t>();
          max_seq = std::max(max_seq, e.seq);
          log.by_time.emplace(e.timestamp, log.entries.size());
          log.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception&) {
          // A torn final line from a crash is skipped rather than fatal.
        }
      }
      log.segment = std::stoul(path.stem().string().substr(std::string_view("segment-").size()));
      log.in_segment = lines;
    }
    if (log.in_segment >= options_.segment_entries) {
      ++log.segment;
      log.in_segment = 0;
    }
  }
  next_seq_ = max_seq + 1;
}

void LogAggregator::register_instance(const InstanceId& instance, const ProjectName& project,
                                      const UserId& user) {
  std::unique_lock lock(registry_mutex_);
  instances_[instance] = ProjectUser{project, user};
  projects_.try_emplace(project);
  per_instance_.try_emplace(instance, 0);
}

void LogAggregator::persist(const ProjectName& project, ProjectLog& log,
                            std::span<const LogEntry> batch) {
  if (options_.dir.empty()) return;
  auto dir = options_.dir / project;
  std::filesystem::create_directories(dir);
  std::size_t i = 0;
  while (i < batch.size()) {
    char name[32];
    std::snprintf(name, sizeof(name), "segment-%06zu.jsonl", log.segment);
    std::ofstream out(dir / name, std::ios::app);
    for (; i < batch.size() && log.in_segment < options_.segment_entries; ++i, ++log.in_segment) {
      const auto& e = batch[i];
      nlohmann::json j{{"timestamp", format_timestamp(e.timestamp)},
                       {"project", e.project},
                       {"user", e.user},
                       {"instance", e.instance},
                       {"level", to_string(e.level)},
                       {"message", e.message},
                       {"seq", e.seq}};
      out << j.dump() << '\n';
    }
    if (log.in_segment >= options_.segment_entries) {
      ++log.segment;
      log.in_segment = 0;
    }
  }
}

void LogAggregator::collect(const InstanceId& instance, std::span<const std::string> lines) {
  std::shared_lock lock(registry_mutex_);
  auto it = instances_.find(instance);
  if (it == instances_.end()) throw Error(ErrorCode::UnknownInstance, "unknown instance: " + instance);
  const auto& owner = it->second;
  auto& log = projects_.at(owner.project);

  std::lock_guard project_lock(*log.mutex);
  std::vector<LogEntry> batch;
  batch.reserve(lines.size());
  for (const auto& raw : lines) {
    LogEntry e;
    e.project = owner.project;
    e.user = owner.user;
    e.instance = instance;
    e.seq = next_seq_.fetch_add(1);
    if (auto parsed = parse_log_line(raw)) {
      e.timestamp = parsed->timestamp;
      e.level = parsed->level;
      e.message = std::move(parsed->message);
    } else {
      e.timestamp = now();
      e.level = LogLevel::INFO;
      e.message = raw;
    }
    batch.push_back(std::move(e));
  }
  persist(owner.project, log, batch);
  for (auto& e : batch) {
    log.by_time.emplace(e.timestamp, log.entries.size());
    log.entries.push_back(std::move(e));
  }
  per_instance_.at(instance).fetch_add(lines.size());
}

std::vector<LogEntry> LogAggregator::query(const LogQuery& q, const UserId& actor) const {
  if (!tenancy_.project_exists(q.project)) throw Error(ErrorCode::NoSuchProject, "no such project: " + q.project);
  if (tenancy_.authorize(actor, q.project, Action::QueryLogs) == Decision::Deny) {
    throw Error(ErrorCode::Forbidden, actor + " may not query logs of " + q.project);
  }
  auto user = q.user;
  if (tenancy_.role_of(q.project, actor) == Role::DataScientist) {
    if (!user) user = actor;
    if (*user != actor) throw Error(ErrorCode::Forbidden, "Data Scientists may only query their own logs");
  }

  std::optional<Timestamp> horizon;
  if (options_.max_age) horizon = now() - *options_.max_age;

  std::vector<LogEntry> out;
  std::shared_lock lock(registry_mutex_);
  auto it = projects_.find(q.project);
  if (it == projects_.end()) return out;
  const auto& log = it->second;
  std::lock_guard project_lock(*log.mutex);
  auto first = q.from ? log.by_time.lower_bound(*q.from) : log.by_time.begin();
  auto last = q.to ? log.by_time.lower_bound(*q.to) : log.by_time.end();
  for (auto e = first; e != last; ++e) {
    const auto& entry = log.entries[e->second];
    if (user && entry.user != *user) continue;
    if (horizon && entry.timestamp < *horizon) continue;
    out.push_back(entry);
    if (q.limit && out.size() >= *q.limit) break;
  }
  return out;
}

std::size_t LogAggregator::count_for_instance(const InstanceId& instance) const {
  std::shared_lock lock(registry_mutex_);
  auto it = per_instance_.find(instance);
  return it == per_instance_.end() ? 0 : it->second.load();
}

LogShipper::LogShipper(LogAggregator& aggregator, InstanceId instance,
                       std::shared_ptr<LogVolume> volume, std::chrono::milliseconds interval)
    : aggregator_(aggregator),
      instance_(std::move(instance)),
      volume_(std::move(volume)),
      interval_(interval) {
  thread_ = std::thread([this] {
    std::unique_lock lock(stop_mutex_);
    while (!stopping_) {
      stop_cv_.wait_for(lock, interval_, [this] { return stopping_; });
      lock.unlock();
      flush();
      lock.lock();
    }
  });
}

LogShipper::~LogShipper() { stop(); }

void LogShipper::flush() {
  std::lock_guard lock(flush_mutex_);
  auto lines = volume_->read_from(cursor_);
  if (!lines.empty()) aggregator_.collect(instance_, lines);
}

void LogShipper::stop() {
  {
    std::lock_guard lock(stop_mutex_);
    if (stopping_ && !thread_.joinable()) return;
    stopping_ = true;
  }
  stop_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  flush();
}

}  // namespace workbench
