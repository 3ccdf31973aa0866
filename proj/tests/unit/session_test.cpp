#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "core/errors.hpp"
#include "core/model_io.hpp"
#include "harness/episode.hpp"
#include "session/protocol.hpp"
#include "session/session.hpp"
#include "support/grid_policy.hpp"

using namespace coplan;
using namespace coplan::session;

namespace {

std::shared_ptr<SessionManager> make_manager() {
  auto registry = std::make_shared<PolicyRegistry>();
  registry->add("br", fixtures::grid_pair().robot);
  return std::make_shared<SessionManager>(registry);
}

// Plays the scripted human for one full round.
StepResult play_round(SessionManager& mgr, const std::string& id) {
  const auto& pair = fixtures::grid_pair();
  std::mt19937_64 rng(1);
  int node = pair.human.sample_initial(rng);
  for (;;) {
    const ActionIndex a = pair.human.act(node, rng);
    StepResult r = mgr.submit_human_action(id, a);
    if (r.round_end) return r;
    node = pair.human.step(node, a, pair.task->human_observation(r.view.state), rng);
  }
}

constexpr ActionIndex kWait = static_cast<ActionIndex>(HumanAction::Wait);
constexpr ActionIndex kRepair = static_cast<ActionIndex>(HumanAction::Repair);

}  // namespace

TEST(Session, CreateGivesTheInitialView) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  const GridTask& task = *fixtures::grid_pair().task;
  EXPECT_EQ(v.round, 1);
  EXPECT_EQ(v.step, 0);
  EXPECT_EQ(v.status, Status::AwaitingHuman);
  EXPECT_FALSE(v.complete);
  EXPECT_EQ(v.state, task.decode(task.initial_state()));
  for (bool needs : v.state.device_needs_work) EXPECT_TRUE(needs);
  EXPECT_THROW(mgr->create_session("missing"), NotFound);
  SessionConfig bad;
  bad.rounds = 0;
  EXPECT_THROW(mgr->create_session("br", bad), InvalidArgument);
}

TEST(Session, RepairWithoutComponentIsPenalized) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  const StepResult r = mgr->submit_human_action(v.session, kRepair);
  EXPECT_TRUE(r.human_invalid);
  EXPECT_LE(r.reward, -20.0);
  EXPECT_FALSE(r.view.state.holding);
  EXPECT_EQ(r.view.state.device_needs_work, v.state.device_needs_work);
  EXPECT_EQ(r.view.step, 1);
  EXPECT_THROW(mgr->submit_human_action(v.session, 7), InvalidArgument);
  EXPECT_THROW(mgr->submit_human_action("nope", kWait), NotFound);
}

TEST(Session, HorizonEndsTheRoundWithTimeout) {
  auto mgr = make_manager();
  SessionConfig cfg;
  cfg.rounds = 2;
  const HumanView v = mgr->create_session("br", cfg);
  StepResult r;
  for (int t = 0; t < 30; ++t) {
    r = mgr->submit_human_action(v.session, kWait);
    if (t < 29) ASSERT_FALSE(r.round_end.has_value()) << t;
  }
  ASSERT_TRUE(r.round_end.has_value());
  EXPECT_EQ(*r.round_end, Status::FinishedTimeout);
  EXPECT_EQ(r.ended_round, 1);
  EXPECT_EQ(r.view.round, 2);
  EXPECT_EQ(r.view.step, 0);
  const SessionExport e = mgr->export_log(v.session);
  ASSERT_EQ(e.traces.size(), 1u);
  EXPECT_FALSE(e.traces[0].success);
  EXPECT_EQ(e.traces[0].steps.size(), 30u);
}

TEST(Session, CompletingTheTaskEndsWithSuccess) {
  auto mgr = make_manager();
  SessionConfig cfg;
  cfg.rounds = 1;
  const HumanView v = mgr->create_session("br", cfg);
  const StepResult r = play_round(*mgr, v.session);
  EXPECT_EQ(*r.round_end, Status::FinishedSuccess);
  EXPECT_GE(r.reward, 90.0);  // completion bonus minus action costs
  EXPECT_TRUE(r.view.complete);
  EXPECT_THROW(mgr->submit_human_action(v.session, kWait), StateError);
  const SessionExport e = mgr->export_log(v.session);
  ASSERT_EQ(e.traces.size(), 1u);
  EXPECT_TRUE(e.traces[0].success);
  EXPECT_FALSE(e.traces[0].partial);
}

TEST(Session, EightRoundsGiveEightTraces) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  int successes = 0;
  for (int round = 1; round <= 8; ++round) {
    const StepResult r = play_round(*mgr, v.session);
    EXPECT_EQ(r.ended_round, round);
    successes += *r.round_end == Status::FinishedSuccess;
  }
  EXPECT_TRUE(mgr->view(v.session).complete);
  const SessionExport e = mgr->export_log(v.session);
  ASSERT_EQ(e.traces.size(), 8u);
  EXPECT_EQ(successes, 8);
  for (const auto& t : e.traces) {
    EXPECT_EQ(json(harness::trace_to_json(harness::trace_from_json(harness::trace_to_json(t)))),
              harness::trace_to_json(t));
  }
}

TEST(Session, ActiveExportIsFlaggedPartial) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  EXPECT_TRUE(mgr->export_log(v.session).traces.empty());
  mgr->submit_human_action(v.session, kWait);
  const SessionExport e = mgr->export_log(v.session);
  ASSERT_EQ(e.traces.size(), 1u);
  EXPECT_TRUE(e.traces[0].partial);
  EXPECT_EQ(e.traces[0].steps.size(), 1u);
}

TEST(Session, QuestionnaireStoredVerbatim) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  mgr->submit_questionnaire(v.session, {8, "mutual", "br", "felt like teamwork"});
  EXPECT_THROW(mgr->submit_questionnaire(v.session, {8, "telepathy", "", ""}), InvalidArgument);
  const SessionExport e = mgr->export_log(v.session);
  ASSERT_EQ(e.questionnaire.size(), 1u);
  EXPECT_EQ(e.questionnaire[0].choice, "mutual");
  EXPECT_EQ(e.questionnaire[0].comment, "felt like teamwork");
  const json j = export_to_json(e);
  EXPECT_EQ(j.at("questionnaire").at(0).at("choice"), "mutual");
}

TEST(Session, ConcurrentSessionsAreIndependent) {
  auto mgr = make_manager();
  const HumanView a = mgr->create_session("br");
  const HumanView b = mgr->create_session("br");
  EXPECT_NE(a.session, b.session);
  // Session a: the scripted human; session b: an idle human. Running them
  // interleaved on two threads must match running a alone.
  auto reference_mgr = make_manager();
  const HumanView ref = reference_mgr->create_session("br");
  const StepResult expected = play_round(*reference_mgr, ref.session);
  StepResult got;
  std::thread t1([&] { got = play_round(*mgr, a.session); });
  std::thread t2([&] {
    for (int i = 0; i < 30; ++i) mgr->submit_human_action(b.session, kWait);
  });
  t1.join();
  t2.join();
  EXPECT_EQ(got.view.round, expected.view.round);
  EXPECT_EQ(*got.round_end, *expected.round_end);
  EXPECT_EQ(harness::trace_to_json(mgr->export_log(a.session).traces.at(0)),
            harness::trace_to_json(reference_mgr->export_log(ref.session).traces.at(0)));
}

TEST(Session, ViewJsonHidesRewards) {
  auto mgr = make_manager();
  const HumanView v = mgr->create_session("br");
  const json j = view_to_json(*fixtures::grid_pair().task, v);
  EXPECT_EQ(j.at("type"), "state");
  for (const char* key : {"grid", "devices", "holding", "round", "step", "status", "robot_cell", "human_cell"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.dump().find("reward"), std::string::npos);
  EXPECT_EQ(j.at("devices").size(), 3u);
}

TEST(Session, ParseHumanAction) {
  EXPECT_EQ(parse_human_action(json("repair")), kRepair);
  EXPECT_EQ(parse_human_action(json("Wait")), kWait);
  EXPECT_EQ(parse_human_action(json(2)), 2);
  EXPECT_THROW(parse_human_action(json("jump")), InvalidArgument);
  EXPECT_THROW(parse_human_action(json(9)), InvalidArgument);
  EXPECT_THROW(parse_human_action(json::array()), InvalidArgument);
}

TEST(PolicyRegistry, LoadsADirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "coplan_registry_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  robot::save_robot_policy(*fixtures::grid_pair().robot, (dir / "alpha.json").string());
  write_json_file(json{{"note", "not a policy"}}, (dir / "notes.txt").string());
  const auto reg = PolicyRegistry::load_directory(dir.string());
  EXPECT_EQ(reg->ids(), std::vector<std::string>{"alpha"});
  EXPECT_NO_THROW(reg->get("alpha"));
  EXPECT_THROW(reg->get("beta"), NotFound);
  EXPECT_THROW(PolicyRegistry::load_directory((dir / "missing").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST(PolicyRegistry, RejectsPoliciesForAnotherTask) {
  PolicyRegistry reg;
  auto wrong = std::make_shared<robot::RobotPolicy>(*fixtures::grid_pair().robot);
  wrong->compiled.initial_observation = 3;
  EXPECT_THROW(reg.add("wrong", wrong), ModelError);
}

// Protocol

TEST(Protocol, NewSessionActionAndRoundEnd) {
  ProtocolHandler handler(make_manager());
  auto replies = handler.handle(json{{"type", "new_session"}, {"policy", "br"}, {"rounds", 1}});
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(replies[0].at("type"), "state");
  const std::string id = replies[0].at("session");
  int last_id = replies[0].at("message_id");
  json end;
  for (int t = 0; t < 30 && end.is_null(); ++t) {
    replies = handler.handle(json{{"type", "action"}, {"session", id}, {"action", "wait"}});
    for (const json& r : replies) {
      EXPECT_GT(r.at("message_id").get<int>(), last_id);
      last_id = r.at("message_id");
      if (r.at("type") == "round_end") end = r;
    }
    EXPECT_EQ(replies.back().at("type"), "state");
    EXPECT_TRUE(replies.back().contains("robot_action"));
  }
  ASSERT_FALSE(end.is_null());
  EXPECT_EQ(end.at("success"), false);
  EXPECT_EQ(end.at("cumulative_reward_hidden"), true);
  EXPECT_EQ(end.dump().find("\"reward\""), std::string::npos);
  // The only round is over.
  replies = handler.handle(json{{"type", "action"}, {"session", id}, {"action", "wait"}});
  EXPECT_EQ(replies.at(0).at("code"), "finished");
}

TEST(Protocol, ErrorsAreTyped) {
  ProtocolHandler handler(make_manager());
  EXPECT_EQ(handler.handle(json{{"type", "new_session"}, {"policy", "nope"}}).at(0).at("code"), "not-found");
  EXPECT_EQ(handler.handle(json{{"nothing", 1}}).at(0).at("code"), "bad-request");
  EXPECT_EQ(handler.handle(json{{"type", "dance"}}).at(0).at("code"), "bad-request");
  EXPECT_EQ(handler.handle(json{{"type", "action"}, {"session", "s9"}, {"action", "wait"}}).at(0).at("code"),
            "not-found");
  const auto created = handler.handle(json{{"type", "new_session"}, {"policy", "br"}});
  const std::string id = created.at(0).at("session");
  EXPECT_EQ(handler.handle(json{{"type", "action"}, {"session", id}, {"action", "fly"}}).at(0).at("code"),
            "invalid-argument");
  const auto text = handler.handle_text("{not json");
  ASSERT_EQ(text.size(), 1u);
  EXPECT_EQ(json::parse(text[0]).at("code"), "bad-request");
}

TEST(Protocol, ResumeAndQuestionnaire) {
  ProtocolHandler handler(make_manager());
  const std::string id = handler.handle(json{{"type", "new_session"}, {"policy", "br"}}).at(0).at("session");
  handler.handle(json{{"type", "action"}, {"session", id}, {"action", 4}});
  const json resumed = handler.handle(json{{"type", "resume"}, {"session", id}}).at(0);
  EXPECT_EQ(resumed.at("type"), "state");
  EXPECT_EQ(resumed.at("step"), 1);
  const json ack = handler.handle(json{{"type", "questionnaire"},
                                       {"session", id},
                                       {"after_round", 8},
                                       {"choice", "robot-adapts"}})
                       .at(0);
  EXPECT_EQ(ack.at("type"), "questionnaire_ack");
  EXPECT_EQ(ack.at("choice"), "robot-adapts");
}
