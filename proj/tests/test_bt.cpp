#include <gtest/gtest.h>

#include "bt_fixtures.hpp"
#include "sentinel/bt/tree_io.hpp"
#include "sentinel/core/rng.hpp"

using namespace sentinel;
using namespace sentinel::bt;
using namespace fixtures;

namespace {
constexpr Nanos kSec = kNanosPerSecond;
}

TEST(Tick, AllOkSucceedsWithoutDispatch) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  auto r = arb.tick(snapshot(1, 0), 0);
  EXPECT_EQ(r.status, TickStatus::Success);
  EXPECT_FALSE(r.dispatched);
  EXPECT_TRUE(sink.events.empty());
}

TEST(Tick, LeftmostSubtreeActsFirst) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  const std::map<std::string, MonitorLevel> both{{"localization", MonitorLevel::Error},
                                                 {"navigation", MonitorLevel::Error}};
  auto r1 = arb.tick(snapshot(1, 0, both), 0);
  ASSERT_TRUE(r1.dispatched);
  EXPECT_EQ(r1.dispatched->error_class, "localization_lost");
  EXPECT_EQ(r1.dispatched->action.id, RecoveryId::RotateSlow);
  EXPECT_EQ(r1.status, TickStatus::Running);
  // still running: the navigation subtree is not reached
  auto r2 = arb.tick(snapshot(2, kSec, both), kSec);
  EXPECT_FALSE(r2.dispatched);
  // localization recovers -> navigation handled next
  auto r3 = arb.tick(snapshot(3, 2 * kSec, {{"navigation", MonitorLevel::Error}}), 2 * kSec);
  ASSERT_TRUE(r3.dispatched);
  EXPECT_EQ(r3.dispatched->error_class, "navigation_error");
  EXPECT_EQ(r3.dispatched->action.id, RecoveryId::Wait);
  ASSERT_EQ(r3.cancelled.size(), 1u);
  EXPECT_EQ(r3.cancelled[0].action, RecoveryId::RotateSlow);
}

TEST(Tick, ErrorClearPreemptsRunningRecovery) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  auto r1 = arb.tick(snapshot(1, 0, {{"navigation", MonitorLevel::Error}}), 0);
  ASSERT_TRUE(r1.dispatched);
  ASSERT_EQ(arb.running().size(), 1u);
  auto r2 = arb.tick(snapshot(2, kSec), kSec);
  EXPECT_FALSE(r2.dispatched);
  ASSERT_EQ(r2.cancelled.size(), 1u);
  EXPECT_EQ(r2.cancelled[0].handle, *r1.handle);
  ASSERT_EQ(sink.events.size(), 2u);
  EXPECT_TRUE(sink.events[1].cancel);
  EXPECT_TRUE(arb.running().empty());
  EXPECT_EQ(r2.status, TickStatus::Success);
}

TEST(Tick, RestartTargetsFailingEntity) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  auto r = arb.tick(snapshot(1, 0, {{"alive/navigation", MonitorLevel::Stale}}), 0);
  ASSERT_TRUE(r.dispatched);
  EXPECT_EQ(r.dispatched->action.id, RecoveryId::RestartNode);
  EXPECT_EQ(r.dispatched->target, "navigation");
}

TEST(Tick, MissingMonitorIsFailureAndDrift) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  auto s = snapshot(1, 0, {{"localization", MonitorLevel::Error}});
  s.entries.erase("localization");
  auto r = arb.tick(s, 0);
  EXPECT_FALSE(r.dispatched);
  EXPECT_FALSE(r.drift.empty());
}

TEST(Tick, SequenceMustNotGoBackwards) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  arb.tick(snapshot(5, 0), 0);
  EXPECT_THROW(arb.tick(snapshot(4, kSec), kSec), Error);
}

TEST(Tick, EscalatesThroughChainToSupervisor) {
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  const std::map<std::string, MonitorLevel> nav{{"navigation", MonitorLevel::Error}};
  std::vector<RecoveryId> order;
  for (int i = 0; i < 120; ++i) {
    auto r = arb.tick(snapshot(i + 1, i * kSec, nav), i * kSec);
    if (r.dispatched) {
      order.push_back(r.dispatched->action.id);
      arb.finished(*r.handle);  // every recovery completes instantly, error persists
    }
  }
  EXPECT_EQ(order, (std::vector{RecoveryId::Wait, RecoveryId::Wait, RecoveryId::MoveBack,
                                RecoveryId::MoveBack, RecoveryId::RequestSupervisor}));
  // unresolved error with pending supervisor keeps the class RUNNING
  EXPECT_EQ(arb.tick(snapshot(200, 200 * kSec, nav), 200 * kSec).status, TickStatus::Running);
  arb.supervisor_resolved("navigation_error");
  auto again = arb.tick(snapshot(201, 201 * kSec, nav), 201 * kSec);
  ASSERT_TRUE(again.dispatched);
  EXPECT_EQ(again.dispatched->action.id, RecoveryId::Wait);  // fresh episode after resolution
}

TEST(Tick, UnhandledErrorFails) {
  // clock_skew has no supervisor step: once resync is spent, nothing can act
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  const std::map<std::string, MonitorLevel> skew{{"skew/jetson", MonitorLevel::Error}};
  TickStatus last = TickStatus::Success;
  for (int i = 0; i < 40; ++i) {
    auto r = arb.tick(snapshot(i + 1, i * kSec, skew), i * kSec);
    if (r.handle) arb.finished(*r.handle);
    last = r.status;
  }
  EXPECT_EQ(last, TickStatus::Failure);
}

TEST(BuildTree, ClassOrderIsPriority) {
  auto def = definition();
  auto root = build_tree(def, monitors());
  ASSERT_EQ(root.kind, NodeKind::Fallback);
  ASSERT_EQ(root.children.size(), def.classes.size() + 1);
  EXPECT_EQ(root.children[0].children[0].as_condition().error_class, "node_down");
  EXPECT_EQ(root.children[2].children[0].as_condition().error_class, "localization_lost");
  EXPECT_EQ(root.children.back().as_condition().error_class, kNominalClass);
}

TEST(BuildTree, LocalizationAndNavigationEndWithSupervisor) {
  auto root = build_tree(definition(), monitors());
  auto chain = [&](std::size_t i) {
    std::vector<RecoveryId> ids;
    for (const auto& a : root.children[i].children[1].children) ids.push_back(a.as_action().action.id);
    return ids;
  };
  EXPECT_EQ(chain(2), (std::vector{RecoveryId::RotateSlow, RecoveryId::RestartLocalization,
                                   RecoveryId::RequestSupervisor}));
  EXPECT_EQ(chain(3), (std::vector{RecoveryId::Wait, RecoveryId::MoveBack, RecoveryId::RequestSupervisor}));
  EXPECT_EQ(chain(1), (std::vector{RecoveryId::ResyncClock}));
}

TEST(BuildTree, Errors) {
  auto def = definition();
  def.classes[1].chain.clear();
  EXPECT_THROW(build_tree(def, monitors()), Error);
  def = definition();
  def.classes[0].monitors.push_back("ghost");
  EXPECT_THROW(build_tree(def, monitors()), ConfigurationDrift);
  def = definition();
  def.classes[0].chain = {make_action(RecoveryId::RequestSupervisor), make_action(RecoveryId::RestartNode)};
  EXPECT_THROW(build_tree(def, monitors()), Error);
  def = definition();
  def.classes.push_back(def.classes[0]);
  EXPECT_THROW(build_tree(def, monitors()), Error);
  EXPECT_THROW(validate_tree(BtNode::sequence({}), {}), Error);
}

TEST(Escalate, Examples) {
  const std::vector chain{make_action(RecoveryId::Wait), make_action(RecoveryId::MoveBack),
                          make_action(RecoveryId::RequestSupervisor)};
  EscalationHistory h;
  auto a = escalate("nav", chain, h, 0);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->id, RecoveryId::Wait);

  h.begin_episode("nav", 0);
  h.record({0, "nav", RecoveryId::Wait, ""});
  h.record({15 * kSec, "nav", RecoveryId::Wait, ""});
  a = escalate("nav", chain, h, 16 * kSec);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->id, RecoveryId::MoveBack);

  h.record({20 * kSec, "nav", RecoveryId::MoveBack, ""});
  h.record({40 * kSec, "nav", RecoveryId::MoveBack, ""});
  a = escalate("nav", chain, h, 41 * kSec);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->id, RecoveryId::RequestSupervisor);

  h.record({41 * kSec, "nav", RecoveryId::RequestSupervisor, ""});
  EXPECT_FALSE(escalate("nav", chain, h, 42 * kSec));
  EXPECT_THROW(escalate("nav", std::vector<RecoveryAction>{}, h, 0), Error);
}

TEST(Escalate, CooldownHoldsInsteadOfSkipping) {
  const std::vector chain{make_action(RecoveryId::Wait), make_action(RecoveryId::MoveBack)};
  EscalationHistory h;
  h.begin_episode("nav", 0);
  h.record({0, "nav", RecoveryId::Wait, ""});
  EXPECT_FALSE(escalate("nav", chain, h, 5 * kSec));
  auto a = escalate("nav", chain, h, 10 * kSec);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->id, RecoveryId::Wait);
}

TEST(Escalate, NewEpisodeResetsBudget) {
  const std::vector chain{make_action(RecoveryId::RestartNode), make_action(RecoveryId::RequestSupervisor)};
  EscalationHistory h;
  h.begin_episode("node", 0);
  h.record({0, "node", RecoveryId::RestartNode, "a"});
  h.record({10 * kSec, "node", RecoveryId::RestartNode, "a"});
  EXPECT_EQ(escalate("node", chain, h, 30 * kSec)->id, RecoveryId::RequestSupervisor);
  h.end_episode("node");
  h.begin_episode("node", 31 * kSec);
  EXPECT_EQ(escalate("node", chain, h, 31 * kSec)->id, RecoveryId::RestartNode);
}

TEST(RestartStorm, Examples) {
  auto restarts = [](std::vector<double> times) {
    std::vector<DispatchRecord> h;
    for (double t : times) h.push_back({from_seconds(t), "node", RecoveryId::RestartNode, "x"});
    return h;
  };
  std::vector<double> ten_in_170, nine_in_180, ten_in_600;
  for (int i = 0; i < 10; ++i) ten_in_170.push_back(i * 170.0 / 9);
  for (int i = 0; i < 9; ++i) nine_in_180.push_back(i * 180.0 / 8);
  for (int i = 0; i < 10; ++i) ten_in_600.push_back(i * 600.0 / 9);
  const Nanos window = 180 * kSec;
  EXPECT_TRUE(detect_restart_storm(restarts(ten_in_170), window, 10));
  EXPECT_FALSE(detect_restart_storm(restarts(nine_in_180), window, 10));
  EXPECT_FALSE(detect_restart_storm(restarts(ten_in_600), window, 10));
  // other dispatch kinds do not count
  auto mixed = restarts(nine_in_180);
  mixed.push_back({from_seconds(1), "nav", RecoveryId::Wait, ""});
  EXPECT_FALSE(detect_restart_storm(mixed, window, 10));
  EXPECT_THROW(detect_restart_storm(mixed, 0, 10), Error);
}

TEST(RestartStorm, ForcesSupervisorRequest) {
  // a node that comes back for one tick and dies again: every death is a new
  // episode, so only the storm guard stops the restart loop
  RecordingSink sink;
  Arbiter arb(definition(), monitors(), sink);
  std::uint64_t seq = 0;
  int restarts = 0;
  bool supervisor = false;
  Nanos t = 0;
  for (int cycle = 0; cycle < 40 && !supervisor; ++cycle) {
    for (int k = 0; k < 12; ++k, t += kSec) {
      const bool up = k == 0;
      auto r = arb.tick(snapshot(++seq, t, up ? std::map<std::string, MonitorLevel>{}
                                              : std::map<std::string, MonitorLevel>{{"alive/navigation", MonitorLevel::Error}}),
                        t);
      if (!r.dispatched) continue;
      arb.finished(*r.handle);
      if (r.dispatched->action.id == RecoveryId::RestartNode) ++restarts;
      if (r.dispatched->action.id == RecoveryId::RequestSupervisor) {
        supervisor = true;
        EXPECT_TRUE(r.storm);
        break;
      }
    }
  }
  EXPECT_TRUE(supervisor);
  EXPECT_EQ(restarts, 10);
}

TEST(TreeIo, RoundTrip) {
  auto def = definition();
  def.classes[1].chain[0].params.target_config = "";
  def.storm.threshold = 7;
  def.classes[2].chain[0].params.duration_s = 12.5;
  const auto text = dump_tree(def);
  auto back = load_tree_text(text, "tree.yaml");
  EXPECT_EQ(back, def);
  EXPECT_EQ(dump_tree(back), text);
}

TEST(TreeIo, DiagnosticsCarryLineNumbers) {
  const std::string text =
      "classes:\n"
      "  - name: nav\n"
      "    monitors: [navigation]\n"
      "    recoveries:\n"
      "      - {action: teleport}\n";
  try {
    load_tree_text(text, "bad.yaml");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5);
    EXPECT_NE(std::string(e.what()).find("teleport"), std::string::npos);
  }
  EXPECT_THROW(load_tree_text("classes:\n  - name: x\n    monitors: [a]\n    recoveries: []\n", "e.yaml"),
               ParseError);
  EXPECT_THROW(load_tree_text("classes: [\n", "broken.yaml"), ParseError);
}
