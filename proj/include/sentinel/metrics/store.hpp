#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sentinel/metrics/event.hpp"

namespace sentinel::metrics {

/// Something that accepts events in order (the simulator writes to one).
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(Event e) = 0;
};

/// In-memory log.
class MemoryLog final : public EventSink {
 public:
  void emit(Event e) override { events_.push_back(std::move(e)); }
  const std::vector<Event>& events() const { return events_; }
  std::vector<Event> take() { return std::move(events_); }

  std::string serialize() const {
    std::string out;
    for (const auto& e : events_) {
      out += encode_event(e);
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<Event> events_;
};

struct StoreOptions {
  std::size_t batch_size = 256;       // events per write+fsync
  std::size_t max_buffered = 100000;  // held while the file is unavailable
  bool fsync = true;
};

/// Append-only newline-delimited store. Ids are line numbers. Events of one
/// producer must arrive in timestamp order. If the file cannot be written the
/// events stay buffered up to `max_buffered`; beyond that they are counted as
/// overflow and dropped.
class EventStore final : public EventSink {
 public:
  explicit EventStore(std::filesystem::path path, StoreOptions options = {})
      : path_(std::move(path)), options_(options) {
    if (std::filesystem::exists(path_)) {
      std::ifstream in(path_, std::ios::binary);
      std::string line;
      std::uint64_t offset = 0;
      while (std::getline(in, line)) {
        if (!line.empty()) {
          const Event e = decode_event(line);
          offsets_.push_back(offset);
          auto& last = last_time_[e.producer];
          last = std::max(last, e.t);
        }
        offset += line.size() + 1;
      }
      file_size_ = offset;
    }
  }

  ~EventStore() override {
    try {
      flush();
    } catch (...) {
    }
  }

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Returns the id the event will have once written.
  std::uint64_t append(const Event& e) {
    auto it = last_time_.find(e.producer);
    if (it != last_time_.end() && e.t < it->second)
      throw Error("out-of-order event from producer '" + e.producer + "'");
    if (pending_.size() >= options_.max_buffered) {
      ++overflow_;
      throw Error("event buffer full");
    }
    last_time_[e.producer] = e.t;
    pending_.push_back(encode_event(e));
    const std::uint64_t id = offsets_.size() + pending_.size() - 1;
    if (pending_.size() >= options_.batch_size) flush();
    return id;
  }

  void emit(Event e) override {
    try {
      append(e);
    } catch (const Error&) {
      if (pending_.size() < options_.max_buffered) throw;  // ordering error is a bug upstream
    }
  }

  /// Write buffered events. Returns false (keeping them) if the file is unavailable.
  bool flush() {
    if (pending_.empty()) return true;
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) return false;
    std::string blob;
    std::vector<std::uint64_t> new_offsets;
    std::uint64_t offset = file_size_;
    for (const auto& line : pending_) {
      new_offsets.push_back(offset);
      blob += line;
      blob += '\n';
      offset += line.size() + 1;
    }
    std::size_t written = 0;
    while (written < blob.size()) {
      const ssize_t n = ::write(fd, blob.data() + written, blob.size() - written);
      if (n <= 0) {
        ::close(fd);
        return false;
      }
      written += static_cast<std::size_t>(n);
    }
    if (options_.fsync) ::fsync(fd);
    ::close(fd);
    offsets_.insert(offsets_.end(), new_offsets.begin(), new_offsets.end());
    file_size_ = offset;
    pending_.clear();
    return true;
  }

  Event read(std::uint64_t id) {
    if (id >= offsets_.size()) {
      const std::uint64_t k = id - offsets_.size();
      if (k < pending_.size()) return decode_event(pending_[k]);
      throw Error("no event with id " + std::to_string(id));
    }
    std::ifstream in(path_, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(offsets_[id]));
    std::string line;
    std::getline(in, line);
    return decode_event(line);
  }

  std::uint64_t size() const { return offsets_.size() + pending_.size(); }
  std::size_t buffered() const { return pending_.size(); }
  std::uint64_t overflow() const { return overflow_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  StoreOptions options_;
  std::vector<std::uint64_t> offsets_;
  std::uint64_t file_size_ = 0;
  std::deque<std::string> pending_;
  std::map<std::string, Nanos> last_time_;
  std::uint64_t overflow_ = 0;
};

/// Streams a log file event by event.
class LogReader {
 public:
  explicit LogReader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("cannot open log " + path.string());
  }

  std::optional<Event> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty()) continue;
      try {
        return decode_event(line);
      } catch (const Error& e) {
        throw ParseError(path_, line_no_, e.what());
      }
    }
    return std::nullopt;
  }

 private:
  std::ifstream in_;
  std::string path_;
  int line_no_ = 0;
};

inline std::vector<Event> read_log(const std::filesystem::path& path) {
  LogReader r(path);
  std::vector<Event> out;
  while (auto e = r.next()) out.push_back(std::move(*e));
  return out;
}

inline std::vector<Event> parse_log_text(std::string_view text, const std::string& source = "<log>") {
  std::vector<Event> out;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(start, end - start);
    if (!line.empty()) {
      try {
        out.push_back(decode_event(line));
      } catch (const Error& e) {
        throw ParseError(source, line_no, e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

}  // namespace sentinel::metrics
