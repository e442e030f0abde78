#pragma once

#include <condition_variable>
#include <deque>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "sentinel/gateway/session.hpp"

namespace sentinel::gateway {

/// One JSON line per notification.
class LogNotifier final : public Notifier {
 public:
  explicit LogNotifier(std::ostream& out = std::clog) : out_(&out) {}
  void send(const Notification& n) override {
    std::lock_guard lock(mutex_);
    *out_ << "notify " << to_json(n).dump() << '\n';
  }

 private:
  std::mutex mutex_;
  std::ostream* out_;
};

/// Splits "http://host:port/path" into scheme+authority and path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// POSTs notifications from a background thread. Failed deliveries are
/// counted, not retried.
class WebhookNotifier final : public Notifier {
 public:
  explicit WebhookNotifier(std::size_t max_queue = 1024) : max_queue_(max_queue), worker_([this] { run(); }) {}

  ~WebhookNotifier() override {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  void send(const Notification& n) override {
    if (n.address.empty()) return;
    {
      std::lock_guard lock(mutex_);
      if (queue_.size() >= max_queue_) {
        ++dropped_;
        return;
      }
      queue_.push_back(n);
    }
    cv_.notify_one();
  }

  /// Wait until everything queued so far has been attempted.
  void drain() {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
  }

  std::size_t delivered() const {
    std::lock_guard lock(mutex_);
    return delivered_;
  }
  std::size_t failed() const {
    std::lock_guard lock(mutex_);
    return failed_ + dropped_;
  }

 private:
  void run() {
    while (true) {
      Notification n;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        n = queue_.front();
        queue_.pop_front();
        busy_ = true;
      }
      bool ok = false;
      try {
        auto [base, path] = split_url(n.address);
        httplib::Client client(base);
        client.set_connection_timeout(2, 0);
        client.set_read_timeout(2, 0);
        auto res = client.Post(path, to_json(n).dump(), "application/json");
        ok = res && res->status >= 200 && res->status < 300;
      } catch (...) {
        ok = false;
      }
      {
        std::lock_guard lock(mutex_);
        (ok ? delivered_ : failed_)++;
        busy_ = false;
      }
      idle_cv_.notify_all();
    }
  }

  std::size_t max_queue_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Notification> queue_;
  bool stopping_ = false;
  bool busy_ = false;
  std::size_t delivered_ = 0;
  std::size_t failed_ = 0;
  std::size_t dropped_ = 0;
  std::thread worker_;
};

}  // namespace sentinel::gateway
