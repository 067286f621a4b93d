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
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "workbench/tenancy.hpp"

namespace workbench {

enum class LogLevel { DEBUG, INFO, WARN, ERROR };

std::string_view to_string(LogLevel level) noexcept;
std::optional<LogLevel> parse_log_level(std::string_view text) noexcept;

struct LogEntry {
  Timestamp timestamp;
  ProjectName project;
  UserId user;
  InstanceId instance;
  LogLevel level = LogLevel::INFO;
  std::string message;
  std::uint64_t seq = 0;  // arrival order within the store
};

struct LogLine {
  Timestamp timestamp;
  LogLevel level;
  std::string message;
};

// "ISO8601 LEVEL message..."; nullopt when the line does not follow it.
std::optional<LogLine> parse_log_line(std::string_view line);
std::string format_log_line(Timestamp ts, LogLevel level, std::string_view message);

// Append-only line buffer standing in for a workspace's log volume. The
// backend writes, a collector tails with a cursor.
class LogVolume {
 public:
  void append(std::string line);
  // Lines from `cursor` onwards; advances the cursor.
  std::vector<std::string> read_from(std::size_t& cursor) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
};

struct LogQuery {
  ProjectName project;
  std::optional<UserId> user;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive
  std::optional<std::size_t> limit;
};

struct LogStoreOptions {
  std::filesystem::path dir;  // empty: memory only; otherwise reloaded on start
  std::size_t segment_entries = 4096;
  std::optional<std::chrono::milliseconds> max_age;
};

// Tenant-tagged log store. Per-project append-only segments on disk, an
// in-memory time index per project for queries.
class LogAggregator {
 public:
  LogAggregator(const Tenancy& tenancy, LogStoreOptions options = {});

  void register_instance(const InstanceId& instance, const ProjectName& project, const UserId& user);

  void collect(const InstanceId& instance, std::span<const std::string> lines);

  // Timestamp order, ties by arrival. Data Scientists only see their own
  // entries; an absent user filter is narrowed to the actor.
  std::vector<LogEntry> query(const LogQuery& q, const UserId& actor) const;

  std::size_t count_for_instance(const InstanceId& instance) const;

 private:
  struct ProjectLog {
    std::vector<LogEntry> entries;
    std::multimap<Timestamp, std::size_t> by_time;
    std::size_t segment = 0;
    std::size_t in_segment = 0;
    std::unique_ptr<std::mutex> mutex = std::make_unique<std::mutex>();
  };

  void reload();
  void persist(const ProjectName& project, ProjectLog& log, std::span<const LogEntry> batch);
  ProjectLog& project_log(const ProjectName& project);

  const Tenancy& tenancy_;
  LogStoreOptions options_;
  mutable std::shared_mutex registry_mutex_;
  std::map<InstanceId, ProjectUser> instances_;
  std::map<ProjectName, ProjectLog> projects_;
  std::map<InstanceId, std::atomic<std::size_t>> per_instance_;
  std::atomic<std::uint64_t> next_seq_{1};
};

// Filebeat-style shipper: tails one instance's log volume on a background
// thread and forwards new lines to the aggregator. stop() performs a final
// flush so nothing emitted before teardown is lost.
class LogShipper {
 public:
  LogShipper(LogAggregator& aggregator, InstanceId instance, std::shared_ptr<LogVolume> volume,
             std::chrono::milliseconds interval = std::chrono::milliseconds(50));
  ~LogShipper();
  LogShipper(const LogShipper&) = delete;
  LogShipper& operator=(const LogShipper&) = delete;

  void flush();
  void stop();

 private:
  LogAggregator& aggregator_;
  InstanceId instance_;
  std::shared_ptr<LogVolume> volume_;
  std::chrono::milliseconds interval_;
  std::mutex flush_mutex_;
  std::size_t cursor_ = 0;
  std::mutex stop_mutex_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace workbench
