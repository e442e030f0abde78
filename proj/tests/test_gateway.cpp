#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "sentinel/gateway/http_server.hpp"
#include "sentinel/gateway/notifiers.hpp"

using namespace sentinel;
using namespace sentinel::gateway;

namespace {

Roster roster(int n) {
  Roster r;
  for (int i = 1; i <= n; ++i) r.push_back({"sup" + std::to_string(i), ""});
  return r;
}

struct RecordingStack final : StackInterface {
  std::vector<SetPose> poses;
  std::vector<Teleop> teleops;
  std::vector<std::string> resolved_classes;
  void set_pose(const InterventionSession&, const SetPose& p) override { poses.push_back(p); }
  void teleop(const InterventionSession&, const Teleop& t) override { teleops.push_back(t); }
  void resolved(const InterventionSession& s) override { resolved_classes.push_back(s.error_class); }
};

}  // namespace

TEST(Sessions, OneNotificationPerSupervisorWithSameUrl) {
  RecordingNotifier n;
  SessionManager m(roster(2), n, "http://robot:8080");
  auto r = m.open_session("localization", {{"loc/quality", "ERROR"}}, 0);
  EXPECT_TRUE(r.created);
  EXPECT_EQ(r.notifications, 2u);
  const auto sent = n.sent();
  ASSERT_EQ(sent.size(), 2u);
  EXPECT_EQ(sent[0].url, sent[1].url);
  EXPECT_EQ(sent[0].url, "http://robot:8080/sessions/" + r.session_id);
  EXPECT_NE(sent[0].supervisor_id, sent[1].supervisor_id);
  EXPECT_EQ(m.get(r.session_id)->state, SessionState::Pending);
}

TEST(Sessions, DuplicateRequestsAreFolded) {
  RecordingNotifier n;
  SessionManager m(roster(3), n);
  const auto first = m.open_session("navigation", {}, 0);
  for (int i = 0; i < 5; ++i) {
    const auto again = m.open_session("navigation", {}, i + 1);
    EXPECT_FALSE(again.created);
    EXPECT_EQ(again.session_id, first.session_id);
  }
  EXPECT_EQ(m.list().size(), 1u);
  EXPECT_EQ(n.sent().size(), 3u);
  const auto other = m.open_session("localization", {}, 10);
  EXPECT_TRUE(other.created);
}

TEST(Sessions, EmptyRosterOpensWithWarning) {
  RecordingNotifier n;
  SessionManager m({}, n);
  const auto r = m.open_session("navigation", {}, 0);
  EXPECT_TRUE(r.created);
  EXPECT_EQ(r.notifications, 0u);
  ASSERT_TRUE(r.warning);
  EXPECT_NE(r.warning->find("empty"), std::string::npos);
}

TEST(Sessions, ActionsForwardAndTranscribe) {
  RecordingNotifier n;
  RecordingStack stack;
  SessionManager m(roster(2), n, "http://x", {}, &stack);
  const auto id = m.open_session("localization", {}, 0).session_id;
  EXPECT_EQ(m.handle_action(id, "sup1", SetPose{1, 2, 0.5}, 5), SessionState::Active);
  ASSERT_EQ(stack.poses.size(), 1u);
  EXPECT_DOUBLE_EQ(stack.poses[0].y, 2.0);
  m.handle_action(id, "sup1", Teleop{2.0, -3.0, 100.0}, 6);
  ASSERT_EQ(stack.teleops.size(), 1u);
  EXPECT_DOUBLE_EQ(stack.teleops[0].v, 0.5);
  EXPECT_DOUBLE_EQ(stack.teleops[0].omega, -1.0);
  EXPECT_DOUBLE_EQ(stack.teleops[0].duration_s, 10.0);
  EXPECT_EQ(m.handle_action(id, "sup1", ConfirmFix{}, 7), SessionState::Resolved);
  const auto s = *m.get(id);
  EXPECT_EQ(s.resolver, "sup1");
  ASSERT_EQ(s.transcript.size(), 3u);
  EXPECT_EQ(s.transcript[0].action, "set_pose");
  EXPECT_EQ(s.transcript[1].params["v"], 0.5);
  EXPECT_EQ(stack.resolved_classes, std::vector<std::string>{"localization"});
}

TEST(Sessions, ClosedSessionsRejectActions) {
  RecordingNotifier n;
  SessionManager m(roster(1), n);
  const auto id = m.open_session("c", {}, 0).session_id;
  m.handle_action(id, "sup1", ConfirmFix{}, 1);
  EXPECT_THROW(m.handle_action(id, "sup1", SetPose{}, 2), SessionError);
  const auto id2 = m.open_session("c", {}, 3).session_id;
  EXPECT_NE(id, id2);
  m.expire_sessions(3 + m.limits().ttl + 1);
  try {
    m.handle_action(id2, "sup1", ConfirmFix{}, 4);
    FAIL();
  } catch (const SessionError& e) {
    EXPECT_EQ(e.code(), SessionError::Code::Closed);
  }
  EXPECT_THROW(m.handle_action("nope", "sup1", ConfirmFix{}, 4), SessionError);
}

TEST(Sessions, AllClearSkipsResolver) {
  RecordingNotifier n;
  SessionManager m(roster(3), n);
  const auto id = m.open_session("c", {}, 0).session_id;
  EXPECT_THROW(m.broadcast_all_clear(id, 1), SessionError);
  m.handle_action(id, "sup2", ConfirmFix{}, 1);
  EXPECT_EQ(n.count(Notification::Kind::AllClear), 2u);
  for (const auto& x : n.sent())
    if (x.kind == Notification::Kind::AllClear) {
      EXPECT_NE(x.supervisor_id, "sup2");
    }
  EXPECT_EQ(m.broadcast_all_clear(id, 2).size(), 2u);

  RecordingNotifier solo_n;
  SessionManager solo(roster(1), solo_n);
  const auto sid = solo.open_session("c", {}, 0).session_id;
  solo.handle_action(sid, "sup1", ConfirmFix{}, 1);
  EXPECT_EQ(solo_n.count(Notification::Kind::AllClear), 0u);
}

TEST(Sessions, ExpiryAndRenotification) {
  RecordingNotifier n;
  SessionManager m(roster(2), n);
  const Nanos ttl = 900 * kNanosPerSecond;
  const auto a = m.open_session("a", {}, 0).session_id;
  const auto b = m.open_session("b", {}, 0).session_id;
  const auto c = m.open_session("c", {}, 0).session_id;
  m.engage(c, "sup1");
  EXPECT_TRUE(m.expire_sessions(ttl, ttl).empty());
  const auto expired = m.expire_sessions(ttl + kNanosPerSecond, ttl);
  EXPECT_EQ(expired, (std::vector<std::string>{a, b}));
  EXPECT_EQ(n.count(Notification::Kind::Reminder), 4u);
  EXPECT_EQ(m.get(c)->state, SessionState::Active);
  EXPECT_TRUE(m.expire_sessions(100 * ttl, ttl).empty());
  EXPECT_EQ(n.count(Notification::Kind::Reminder), 4u);
  EXPECT_THROW(m.expire_sessions(0, 0), Error);
}

TEST(Sessions, ConcurrentDuplicateRequestsYieldOneSession) {
  RecordingNotifier n;
  SessionManager m(roster(2), n);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      for (int k = 0; k < 100; ++k) m.open_session("navigation", {}, k);
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(m.list().size(), 1u);
  EXPECT_EQ(n.sent().size(), 2u);
}

TEST(Webhook, SplitsUrls) {
  EXPECT_EQ(split_url("http://h:9/a/b").first, "http://h:9");
  EXPECT_EQ(split_url("http://h:9/a/b").second, "/a/b");
  EXPECT_EQ(split_url("http://h:9").second, "/");
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    manager = std::make_unique<SessionManager>(roster(2), notifier, "http://robot", GatewayLimits{}, &stack);
    server = std::make_unique<GatewayServer>(*manager, hub, ServerOptions{"127.0.0.1", 0, "secret", {}},
                                             [this] { return now.load(); });
    port = server->start();
  }
  void TearDown() override { server.reset(); }

  httplib::Client client() {
    httplib::Client c("127.0.0.1", port);
    c.set_default_headers({{"Authorization", "Bearer secret"}});
    return c;
  }

  RecordingNotifier notifier;
  RecordingStack stack;
  StreamHub hub;
  std::atomic<Nanos> now{0};
  std::unique_ptr<SessionManager> manager;
  std::unique_ptr<GatewayServer> server;
  int port = 0;
};

TEST_F(HttpFixture, TokenRequired) {
  httplib::Client c("127.0.0.1", port);
  auto res = c.Get("/sessions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
  res = c.Get("/sessions?token=secret");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
}

TEST_F(HttpFixture, SessionLifecycleOverHttp) {
  const auto id = manager->open_session("localization", {{"loc/quality", "ERROR"}}, 0).session_id;
  auto c = client();
  auto res = c.Get("/sessions");
  ASSERT_TRUE(res);
  auto list = nlohmann::json::parse(res->body);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["state"], "PENDING");

  res = c.Get("/sessions/" + id + "?supervisor=sup1");
  ASSERT_TRUE(res);
  EXPECT_EQ(nlohmann::json::parse(res->body)["state"], "ACTIVE");

  res = c.Post("/sessions/" + id + "/pose", R"({"supervisor":"sup1","x":1.5,"y":-2,"theta":0.3})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  ASSERT_EQ(stack.poses.size(), 1u);
  EXPECT_DOUBLE_EQ(stack.poses[0].x, 1.5);

  res = c.Post("/sessions/" + id + "/teleop", R"({"supervisor":"sup1","v":3,"omega":0.2,"duration_s":2})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_DOUBLE_EQ(stack.teleops.at(0).v, 0.5);

  res = c.Post("/sessions/" + id + "/resolve", R"({"supervisor":"sup1"})", "application/json");
  ASSERT_TRUE(res);
  auto body = nlohmann::json::parse(res->body);
  EXPECT_EQ(body["state"], "RESOLVED");
  EXPECT_EQ(body["transcript"].size(), 3u);
  EXPECT_EQ(notifier.count(Notification::Kind::AllClear), 1u);

  res = c.Post("/sessions/" + id + "/resolve", R"({"supervisor":"sup1"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  res = c.Get("/sessions/zzz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = c.Post("/sessions/" + id + "/pose", "{bad", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpFixture, StreamDeliversStatusAndSessionEvents) {
  std::string received;
  std::atomic<bool> got_session{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(5, 0);
    c.Get("/stream?token=secret", [&](const char* data, std::size_t len) {
      received.append(data, len);
      if (received.find("event: session\n") != std::string::npos &&
          received.find("event: status\n") != std::string::npos) {
        got_session = true;
        return false;
      }
      return true;
    });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  hub.publish("status", {{"sequence", 1}, {"worst", "OK"}});
  manager->open_session("navigation", {}, 0);
  reader.join();
  EXPECT_TRUE(got_session);
  EXPECT_NE(received.find("event: sessions\n"), std::string::npos);
  EXPECT_NE(received.find("\"error_class\":\"navigation\""), std::string::npos);
}

TEST(Webhook, PostsToReceiver) {
  httplib::Server receiver;
  std::mutex mu;
  std::vector<nlohmann::json> bodies;
  receiver.Post("/hook", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    bodies.push_back(nlohmann::json::parse(req.body));
    res.status = 204;
  });
  const int port = receiver.bind_to_any_port("127.0.0.1");
  std::thread t([&] { receiver.listen_after_bind(); });
  receiver.wait_until_ready();
  {
    WebhookNotifier hook;
    Roster r{{"a", "http://127.0.0.1:" + std::to_string(port) + "/hook"}, {"b", "http://127.0.0.1:1/unreachable"}};
    SessionManager m(r, hook);
    m.open_session("navigation", {}, 42);
    hook.drain();
    EXPECT_EQ(hook.delivered(), 1u);
    EXPECT_EQ(hook.failed(), 1u);
  }
  receiver.stop();
  t.join();
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["type"], "request");
  EXPECT_EQ(bodies[0]["error_class"], "navigation");
  EXPECT_EQ(bodies[0]["time_ns"], 42);
}
