#include <gtest/gtest.h>

#include <map>
#include <random>

#include "agentos/fsm.hpp"

using namespace agentos;

namespace {

// Written out by hand so the implementation is checked against a second copy.
const std::map<std::pair<HostState, HostEvent>, HostState>& host_table() {
  using S = HostState;
  using E = HostEvent;
  static const std::map<std::pair<S, E>, S> t{
      {{S::Continue, E::SubtaskReady}, S::Assign},      {{S::Continue, E::ClarificationNeeded}, S::Pending},
      {{S::Continue, E::AllDone}, S::Finish},           {{S::Continue, E::Fatal}, S::Fail},
      {{S::Assign, E::SubtaskDone}, S::Continue},       {{S::Assign, E::SubtaskFailed}, S::Fail},
      {{S::Assign, E::Fatal}, S::Fail},                 {{S::Pending, E::UserReply}, S::Continue},
      {{S::Pending, E::Fatal}, S::Fail},
  };
  return t;
}

const std::map<std::pair<AppState, AppEvent>, AppState>& app_table() {
  using S = AppState;
  using E = AppEvent;
  static const std::map<std::pair<S, E>, S> t{
      {{S::Continue, E::Step}, S::Continue},     {{S::Continue, E::RiskDetected}, S::Pending},
      {{S::Continue, E::Finished}, S::Finish},   {{S::Continue, E::Failed}, S::Fail},
      {{S::Pending, E::Confirmed}, S::Continue}, {{S::Pending, E::Failed}, S::Fail},
  };
  return t;
}

constexpr HostState kHostStates[] = {HostState::Continue, HostState::Assign, HostState::Pending, HostState::Finish,
                                     HostState::Fail};
constexpr AppState kAppStates[] = {AppState::Continue, AppState::Pending, AppState::Finish, AppState::Fail};

}  // namespace

TEST(HostFsm, MatchesTableExhaustively) {
  for (auto s : kHostStates) {
    for (auto e : kAllHostEvents) {
      const auto it = host_table().find({s, e});
      const auto got = host_transition(s, e);
      if (it == host_table().end()) {
        EXPECT_FALSE(got) << to_string(s) << " " << to_string(e);
      } else {
        EXPECT_EQ(got, it->second) << to_string(s) << " " << to_string(e);
      }
    }
  }
}

TEST(AppFsm, MatchesTableExhaustively) {
  for (auto s : kAppStates) {
    for (auto e : kAllAppEvents) {
      const auto it = app_table().find({s, e});
      const auto got = app_transition(s, e);
      if (it == app_table().end()) {
        EXPECT_FALSE(got);
      } else {
        EXPECT_EQ(got, it->second);
      }
    }
  }
}

TEST(HostFsm, IllegalEventThrowsAndKeepsState) {
  HostFsm fsm;
  try {
    fsm.fire(HostEvent::UserReply);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IllegalTransition);
  }
  EXPECT_EQ(fsm.state(), HostState::Continue);
  EXPECT_TRUE(fsm.history().empty());
}

TEST(HostFsm, TerminalStatesAbsorbNothing) {
  for (auto s : {HostState::Finish, HostState::Fail}) {
    HostFsm fsm(s);
    for (auto e : kAllHostEvents) EXPECT_THROW(fsm.fire(e), Error);
  }
  for (auto s : {AppState::Finish, AppState::Fail}) {
    AppFsm fsm(s);
    for (auto e : kAllAppEvents) EXPECT_THROW(fsm.fire(e), Error);
  }
}

TEST(Fsm, RandomSequencesStayInTable) {
  std::mt19937 rng(2024);
  for (int n = 0; n < 2000; ++n) {
    HostFsm host;
    AppFsm app;
    for (int i = 0; i < 12; ++i) {
      const auto he = kAllHostEvents[rng() % std::size(kAllHostEvents)];
      const auto before = host.state();
      const auto it = host_table().find({before, he});
      if (it == host_table().end()) {
        ASSERT_THROW(host.fire(he), Error);
        ASSERT_EQ(host.state(), before);
      } else {
        ASSERT_EQ(host.fire(he), it->second);
      }
      const auto ae = kAllAppEvents[rng() % std::size(kAllAppEvents)];
      const auto abefore = app.state();
      const auto ait = app_table().find({abefore, ae});
      if (ait == app_table().end()) {
        ASSERT_THROW(app.fire(ae), Error);
      } else {
        ASSERT_EQ(app.fire(ae), ait->second);
      }
    }
    for (const auto& t : host.history()) ASSERT_EQ(host_table().at({t.from, t.event}), t.to);
  }
}
