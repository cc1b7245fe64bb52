/*
 * Copyright 2026 The durel-kit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Persistent annotation studies. Each study lives in its own directory:
//
//   <root>/<study_id>/task.csv       blinded rows, immutable
//   <root>/<study_id>/key.csv        withheld metadata, immutable
//   <root>/<study_id>/study.json     roster (ids, tokens) and duplicate policy
//   <root>/<study_id>/journal.jsonl  one judgment per line, append-only:
//                                    {"annotator":..,"pair_id":..,"value":..,"timestamp":..}
//
// Every accepted submission is appended and fsync'ed before it is
// acknowledged. Opening a store replays the journals; a torn final line left
// by a crash is cut off.

#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "durel/error.hpp"
#include "durel/judgments.hpp"
#include "durel/task.hpp"
#include "durel/timestamp.hpp"

namespace durel {

/// Re-creating a study under an existing id with a different payload.
class StudyExistsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnauthorizedError : public Error {
 public:
  using Error::Error;
};

struct RosterEntry {
  std::string id;
  std::string token;  // empty in a request: generate one

  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct AnnotatorProgress {
  std::string annotator;
  std::size_t judged = 0;
  std::size_t remaining = 0;
  double percent = 0.0;
};

struct Progress {
  std::string study_id;
  std::size_t total = 0;
  std::vector<AnnotatorProgress> annotators;
};

/// next_pair result: a blinded row, or nothing when the annotator is done.
struct NextPair {
  std::optional<TaskRow> row;
  std::size_t judged = 0;
  std::size_t total = 0;
};

struct SubmitResult {
  std::string pair_id;
  int value = 0;
  bool duplicate = false;  // re-submission of the stored value, nothing appended
  Timestamp timestamp{};
  std::size_t judged = 0;
  std::size_t total = 0;
};

struct CreateResult {
  std::string study_id;
  bool created = false;
  DuplicatePolicy policy = DuplicatePolicy::kReject;
  std::size_t rows = 0;
  std::vector<RosterEntry> roster;
};

inline bool valid_study_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
}

namespace detail {

inline std::string random_token() {
  std::random_device rd;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string t;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t r = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    for (int k = 0; k < 8; ++k, r >>= 4) t.push_back(kHex[r & 0xF]);
  }
  return t;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_synced(const std::filesystem::path& p, std::string_view content) {
  const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot write " + p.string() + ": " + std::strerror(errno));
  std::size_t done = 0;
  while (done < content.size()) {
    const auto n = ::write(fd, content.data() + done, content.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw IoError("write failed for " + p.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

inline void fsync_dir(const std::filesystem::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

/// Append-only file handle; each append is one write() followed by fsync().
class AppendFile {
 public:
  explicit AppendFile(const std::filesystem::path& p) : path_(p) {
    fd_ = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open journal " + p.string() + ": " + std::strerror(errno));
  }
  AppendFile(const AppendFile&) = delete;
  AppendFile& operator=(const AppendFile&) = delete;
  ~AppendFile() {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(std::string_view line) {
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError("journal append failed for " + path_.string() + ": " + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw IoError("journal fsync failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

inline std::string journal_line(const Judgment& j) {
  nlohmann::ordered_json o;
  o["annotator"] = j.annotator;
  o["pair_id"] = j.pair_id;
  o["value"] = j.value.value();
  o["timestamp"] = j.timestamp ? format_timestamp(*j.timestamp) : std::string{};
  return o.dump() + "\n";
}

inline Judgment parse_journal_line(std::string_view line, std::size_t lineno) {
  try {
    const auto o = nlohmann::json::parse(line);
    Judgment j{o.at("annotator").get<std::string>(), o.at("pair_id").get<std::string>(),
               JudgmentValue::of(o.at("value").get<int>()), std::nullopt};
    const auto ts = o.at("timestamp").get<std::string>();
    if (!ts.empty()) {
      j.timestamp = parse_timestamp(ts);
      if (!j.timestamp) throw ParseError("malformed timestamp", lineno);
    }
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corrupt journal record: ") + e.what(), lineno);
  } catch (const ValidationError& e) {
    throw ParseError(std::string("corrupt journal record: ") + e.what(), lineno);
  }
}

}  // namespace detail

/// One study: immutable task, key and roster plus the judgment journal.
/// Writers are serialized; readers share a lock.
class Study {
 public:
  Study(std::string id, AnnotationTask task, TaskKey key, std::vector<RosterEntry> roster, DuplicatePolicy policy)
      : id_(std::move(id)), task_(std::move(task)), key_(std::move(key)), roster_(std::move(roster)),
        policy_(policy) {
    for (std::size_t i = 0; i < task_.rows.size(); ++i) row_index_.emplace(task_.rows[i].pair_id, i);
    for (std::size_t a = 0; a < roster_.size(); ++a) annotator_index_.emplace(roster_[a].id, a);
    cells_.assign(roster_.size(), std::vector<std::optional<JudgmentValue>>(task_.rows.size()));
    judged_.assign(roster_.size(), 0);
    cursor_.assign(roster_.size(), 0);
  }

  const std::string& id() const noexcept { return id_; }
  const AnnotationTask& task() const noexcept { return task_; }
  const TaskKey& key() const noexcept { return key_; }
  const std::vector<RosterEntry>& roster() const noexcept { return roster_; }
  DuplicatePolicy policy() const noexcept { return policy_; }

  void attach_journal(std::unique_ptr<detail::AppendFile> journal) { journal_ = std::move(journal); }

  bool has_annotator(std::string_view annotator) const {
    return annotator_index_.contains(std::string(annotator));
  }

  bool authorized(std::string_view annotator, std::string_view token) const {
    const auto it = annotator_index_.find(std::string(annotator));
    return it != annotator_index_.end() && !token.empty() && roster_[it->second].token == token;
  }

  NextPair next_pair(std::string_view annotator) const {
    std::shared_lock lock(mutex_);
    const std::size_t a = annotator_pos(annotator);
    NextPair out{std::nullopt, judged_[a], task_.rows.size()};
    if (cursor_[a] < task_.rows.size()) out.row = task_.rows[cursor_[a]];
    return out;
  }

  SubmitResult submit(std::string_view annotator, std::string_view pair_id, int value,
                      Timestamp when = now_utc()) {
    const JudgmentValue v = JudgmentValue::of(value);
    std::unique_lock lock(mutex_);
    const std::size_t a = annotator_pos(annotator);
    const auto row_it = row_index_.find(std::string(pair_id));
    if (row_it == row_index_.end()) throw NotFoundError("unknown pair_id '" + std::string(pair_id) + "'");
    const std::size_t row = row_it->second;

    const auto& stored = cells_[a][row];
    if (stored && *stored == v) {
      return {std::string(pair_id), value, true, stamp_of(a, row), judged_[a], task_.rows.size()};
    }
    if (stored && policy_ == DuplicatePolicy::kReject)
      throw ConflictError("pair '" + std::string(pair_id) + "' already judged as " + std::to_string(stored->value()),
                          stored->value());

    Judgment j{std::string(annotator), std::string(pair_id), v, when};
    if (journal_) journal_->append(detail::journal_line(j));
    apply(j);
    return {j.pair_id, value, false, when, judged_[a], task_.rows.size()};
  }

  /// Replays one journal record without re-persisting it.
  void replay(const Judgment& j, std::size_t lineno) {
    std::unique_lock lock(mutex_);
    if (!annotator_index_.contains(j.annotator))
      throw ParseError("journal names unknown annotator '" + j.annotator + "'", lineno);
    if (!row_index_.contains(j.pair_id))
      throw ParseError("journal names unknown pair_id '" + j.pair_id + "'", lineno);
    apply(j);
  }

  Progress progress() const {
    std::shared_lock lock(mutex_);
    Progress p{id_, task_.rows.size(), {}};
    for (std::size_t a = 0; a < roster_.size(); ++a) {
      const std::size_t total = task_.rows.size();
      p.annotators.push_back({roster_[a].id, judged_[a], total - judged_[a],
                              total == 0 ? 100.0 : 100.0 * static_cast<double>(judged_[a]) / static_cast<double>(total)});
    }
    return p;
  }

  /// Journal records that survive the duplicate policy, in arrival order.
  std::vector<Judgment> resolved_judgments() const {
    std::shared_lock lock(mutex_);
    std::vector<bool> keep(journal_entries_.size(), false);
    std::unordered_set<std::string> seen;
    for (std::size_t i = journal_entries_.size(); i-- > 0;) {
      const auto& j = journal_entries_[i];
      keep[i] = seen.insert(j.annotator + '\x1f' + j.pair_id).second;
    }
    std::vector<Judgment> out;
    for (std::size_t i = 0; i < journal_entries_.size(); ++i)
      if (keep[i]) out.push_back(journal_entries_[i]);
    return out;
  }

  std::string export_csv() const {
    std::ostringstream out;
    const auto js = resolved_judgments();
    write_judgments(out, js);
    return out.str();
  }

  std::size_t journal_size() const {
    std::shared_lock lock(mutex_);
    return journal_entries_.size();
  }

 private:
  std::size_t annotator_pos(std::string_view annotator) const {
    const auto it = annotator_index_.find(std::string(annotator));
    if (it == annotator_index_.end())
      throw NotFoundError("annotator '" + std::string(annotator) + "' is not on the roster of study '" + id_ + "'");
    return it->second;
  }

  Timestamp stamp_of(std::size_t a, std::size_t row) const {
    for (std::size_t i = journal_entries_.size(); i-- > 0;) {
      const auto& j = journal_entries_[i];
      if (j.annotator == roster_[a].id && j.pair_id == task_.rows[row].pair_id) return j.timestamp.value_or(Timestamp{});
    }
    return {};
  }

  // Caller holds the unique lock.
  void apply(const Judgment& j) {
    const std::size_t a = annotator_index_.at(j.annotator);
    const std::size_t row = row_index_.at(j.pair_id);
    auto& cell = cells_[a][row];
    if (!cell) ++judged_[a];
    cell = j.value;
    journal_entries_.push_back(j);
    while (cursor_[a] < task_.rows.size() && cells_[a][cursor_[a]]) ++cursor_[a];
  }

  std::string id_;
  AnnotationTask task_;
  TaskKey key_;
  std::vector<RosterEntry> roster_;
  DuplicatePolicy policy_;
  std::unordered_map<std::string, std::size_t> row_index_;
  std::unordered_map<std::string, std::size_t> annotator_index_;

  mutable std::shared_mutex mutex_;
  std::vector<std::vector<std::optional<JudgmentValue>>> cells_;  // [annotator][row]
  std::vector<std::size_t> judged_;
  std::vector<std::size_t> cursor_;  // first row without a judgment
  std::vector<Judgment> journal_entries_;
  std::unique_ptr<detail::AppendFile> journal_;
};

/// All studies under one data directory.
class StudyStore {
 public:
  /// Loads every study found under `root`, creating the directory if needed.
  explicit StudyStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create data directory " + root_.string() + ": " + ec.message());
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
      if (!entry.is_directory()) continue;
      const auto name = entry.path().filename().string();
      if (!valid_study_id(name) || !std::filesystem::exists(entry.path() / "study.json")) continue;
      studies_.emplace(name, load(name));
    }
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Creates and persists a study; identical re-uploads return the existing one.
  CreateResult create_study(const std::string& study_id, AnnotationTask task, TaskKey key,
                            std::vector<RosterEntry> roster, DuplicatePolicy policy) {
    if (!valid_study_id(study_id)) throw ValidationError("invalid study id '" + study_id + "'");
    validate_payload(task, key, roster);

    std::unique_lock lock(mutex_);
    if (auto it = studies_.find(study_id); it != studies_.end()) {
      const Study& s = *it->second;
      if (!same_payload(s, task, key, roster, policy))
        throw StudyExistsError("study '" + study_id + "' already exists with a different payload");
      return {study_id, false, s.policy(), s.task().rows.size(), s.roster()};
    }
    for (auto& r : roster)
      if (r.token.empty()) r.token = detail::random_token();

    persist(study_id, task, key, roster, policy);
    auto study = std::make_unique<Study>(study_id, std::move(task), std::move(key), std::move(roster), policy);
    study->attach_journal(std::make_unique<detail::AppendFile>(root_ / study_id / "journal.jsonl"));
    CreateResult out{study_id, true, policy, study->task().rows.size(), study->roster()};
    studies_.emplace(study_id, std::move(study));
    return out;
  }

  Study& study(std::string_view study_id) {
    std::shared_lock lock(mutex_);
    auto it = studies_.find(std::string(study_id));
    if (it == studies_.end()) throw NotFoundError("unknown study '" + std::string(study_id) + "'");
    return *it->second;
  }

  std::vector<std::string> study_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : studies_) out.push_back(id);
    return out;
  }

  NextPair next_pair(std::string_view study_id, std::string_view annotator) { return study(study_id).next_pair(annotator); }
  SubmitResult submit_judgment(std::string_view study_id, std::string_view annotator, std::string_view pair_id, int value) {
    return study(study_id).submit(annotator, pair_id, value);
  }
  Progress progress(std::string_view study_id) { return study(study_id).progress(); }
  std::string export_judgments(std::string_view study_id) { return study(study_id).export_csv(); }

 private:
  static void validate_payload(const AnnotationTask& task, const TaskKey& key, const std::vector<RosterEntry>& roster) {
    std::unordered_set<std::string> task_ids;
    for (const auto& r : task.rows)
      if (!task_ids.insert(r.pair_id).second) throw ValidationError("duplicate pair_id '" + r.pair_id + "' in task");
    if (task_ids.size() != key.size()) throw ValidationError("task and key list different pair_ids");
    for (const auto& e : key.entries())
      if (!task_ids.contains(e.pair_id))
        throw ValidationError("pair_id '" + e.pair_id + "' is in the key but not in the task");
    if (roster.empty()) throw ValidationError("roster is empty");
    std::unordered_set<std::string> ids;
    for (const auto& r : roster) {
      if (r.id.empty()) throw ValidationError("roster entry without id");
      if (!ids.insert(r.id).second) throw ValidationError("duplicate annotator '" + r.id + "' in roster");
    }
  }

  static bool same_payload(const Study& s, const AnnotationTask& task, const TaskKey& key,
                           const std::vector<RosterEntry>& roster, DuplicatePolicy policy) {
    if (s.policy() != policy || s.task().rows != task.rows || !(s.key() == key) || s.roster().size() != roster.size())
      return false;
    for (std::size_t i = 0; i < roster.size(); ++i) {
      if (s.roster()[i].id != roster[i].id) return false;
      if (!roster[i].token.empty() && roster[i].token != s.roster()[i].token) return false;
    }
    return true;
  }

  void persist(const std::string& id, const AnnotationTask& task, const TaskKey& key,
               const std::vector<RosterEntry>& roster, DuplicatePolicy policy) {
    const auto tmp = root_ / ("." + id + ".tmp");
    std::filesystem::remove_all(tmp);
    std::filesystem::create_directories(tmp);
    std::ostringstream t, k;
    write_task(t, task);
    write_key(k, key);
    nlohmann::ordered_json meta;
    meta["study_id"] = id;
    meta["policy"] = std::string(to_string(policy));
    meta["roster"] = nlohmann::ordered_json::array();
    for (const auto& r : roster) meta["roster"].push_back({{"id", r.id}, {"token", r.token}});
    detail::write_file_synced(tmp / "task.csv", t.str());
    detail::write_file_synced(tmp / "key.csv", k.str());
    detail::write_file_synced(tmp / "journal.jsonl", "");
    detail::write_file_synced(tmp / "study.json", meta.dump(2) + "\n");
    detail::fsync_dir(tmp);
    std::filesystem::rename(tmp, root_ / id);
    detail::fsync_dir(root_);
  }

  std::unique_ptr<Study> load(const std::string& id) {
    const auto dir = root_ / id;
    std::vector<RosterEntry> roster;
    DuplicatePolicy policy = DuplicatePolicy::kReject;
    try {
      const auto meta = nlohmann::json::parse(detail::read_file(dir / "study.json"));
      const auto p = parse_policy(meta.at("policy").get<std::string>());
      if (!p) throw ParseError("unknown policy in " + (dir / "study.json").string(), 0);
      policy = *p;
      for (const auto& r : meta.at("roster")) roster.push_back({r.at("id").get<std::string>(), r.at("token").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("corrupt " + (dir / "study.json").string() + ": " + e.what(), 0);
    }
    std::ifstream tin(dir / "task.csv", std::ios::binary), kin(dir / "key.csv", std::ios::binary);
    if (!tin || !kin) throw IoError("study '" + id + "' lacks task.csv or key.csv");
    auto task = read_task(tin).task;
    auto key = read_key(kin);
    auto study = std::make_unique<Study>(id, std::move(task), std::move(key), std::move(roster), policy);

    const auto journal_path = dir / "journal.jsonl";
    if (std::filesystem::exists(journal_path)) {
      const std::string content = detail::read_file(journal_path);
      std::size_t pos = 0, lineno = 0;
      while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail
        ++lineno;
        const std::string_view line(content.data() + pos, nl - pos);
        if (!line.empty()) study->replay(detail::parse_journal_line(line, lineno), lineno);
        pos = nl + 1;
      }
      if (pos < content.size()) std::filesystem::resize_file(journal_path, pos);
    }
    study->attach_journal(std::make_unique<detail::AppendFile>(journal_path));
    return study;
  }

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<Study>> studies_;
};

}  // namespace durel
