#include <gtest/gtest.h>

#include <sstream>

#include "satgame/agents.hpp"
#include "satgame/util.hpp"

using namespace satgame;

namespace {

Clause C(std::initializer_list<int> lits) {
  Clause c;
  for (int l : lits) c.push_back(Literal::from_dimacs(l));
  return c;
}

Architecture tiny_arch(int rows, int vars, HeadKind head) {
  Architecture a;
  a.rows = rows;
  a.vars = vars;
  a.conv_filters = {3};
  a.dense_units = 8;
  a.head = head;
  return a;
}

Transition make_transition(int tag) {
  Transition t;
  t.s = Observation(3, 2);
  t.s.set(tag % 3, tag % 2, 0);
  t.s.mask().assign(4, 1);
  t.action = tag % 4;
  t.reward = -0.01 * tag;
  t.s_next = Observation(3, 2);
  t.s_next.mask().assign(4, 0);
  t.s_next.mask()[static_cast<std::size_t>(tag % 4)] = 1;
  t.terminal = tag % 2 == 0;
  return t;
}

}  // namespace

TEST(EpsilonSchedule, LinearThenConstant) {
  EXPECT_DOUBLE_EQ(epsilon_schedule(0, 1000), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_schedule(500, 1000), 0.525);
  EXPECT_DOUBLE_EQ(epsilon_schedule(1000, 1000), 0.05);
  EXPECT_DOUBLE_EQ(epsilon_schedule(5000, 1000), 0.05);
  EXPECT_GT(epsilon_schedule(499, 1000), epsilon_schedule(500, 1000));
}

TEST(DeepQTarget, BootstrapsOverLegalActionsOnly) {
  const std::vector<double> q{5.0, -0.1, -0.3, 7.0};
  const ActionMask legal{0, 1, 1, 0};
  EXPECT_NEAR(deepq_target(-0.005, false, 0.99, q, legal), -0.104, 1e-12);
}

TEST(DeepQTarget, TerminalAndZeroGammaReturnReward) {
  const std::vector<double> q{3.0, 4.0};
  const ActionMask legal{1, 1};
  EXPECT_EQ(deepq_target(-0.25, true, 0.99, q, legal), -0.25);
  EXPECT_EQ(deepq_target(-0.25, false, 0.0, q, legal), -0.25);
  // A terminal state has no legal moves; no bootstrap is attempted.
  EXPECT_EQ(deepq_target(-0.5, true, 0.99, q, ActionMask{0, 0}), -0.5);
}

TEST(ArgmaxLegal, TiesGoLowAndEmptyThrows) {
  const std::vector<double> v{1.0, 2.0, 2.0, 9.0};
  EXPECT_EQ(argmax_legal(v, ActionMask{1, 1, 1, 0}), 1);
  EXPECT_EQ(argmax_legal(v, ActionMask{1, 0, 0, 0}), 0);
  EXPECT_THROW(argmax_legal(v, ActionMask{0, 0, 0, 0}), std::logic_error);
}

TEST(ReplayBuffer, RingKeepsNewestAndSamplesInRange) {
  ReplayBuffer buf(5);
  for (int i = 0; i < 12; ++i) buf.push(make_transition(i));
  ASSERT_EQ(buf.size(), 5u);
  std::vector<int> actions;
  std::vector<double> rewards;
  for (std::size_t i = 0; i < buf.size(); ++i) rewards.push_back(buf[i].reward);
  std::sort(rewards.begin(), rewards.end());
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(rewards[static_cast<std::size_t>(k)], -0.01 * (11 - k));

  Rng rng(4);
  std::vector<int> hits(5, 0);
  for (std::size_t i : buf.sample(5000, rng)) {
    ASSERT_LT(i, 5u);
    ++hits[i];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(ReplayBuffer, SerializationRoundTrip) {
  ReplayBuffer buf(4);
  for (int i = 0; i < 6; ++i) buf.push(make_transition(i));
  std::stringstream ss;
  buf.write(ss);
  const ReplayBuffer back = ReplayBuffer::read(ss);
  ASSERT_EQ(back.size(), buf.size());
  EXPECT_EQ(back.capacity(), buf.capacity());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    EXPECT_EQ(back[i].s, buf[i].s);
    EXPECT_EQ(back[i].s_next, buf[i].s_next);
    EXPECT_EQ(back[i].action, buf[i].action);
    EXPECT_EQ(back[i].reward, buf[i].reward);
    EXPECT_EQ(back[i].terminal, buf[i].terminal);
  }
  // Pushing after the round trip overwrites the same slot in both.
  ReplayBuffer a = buf, b = back;
  a.push(make_transition(40));
  b.push(make_transition(40));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].reward, b[i].reward);
}

TEST(PolicyKind, NamesRoundTrip) {
  for (PolicyKind k : {PolicyKind::random, PolicyKind::vsids, PolicyKind::greedy_q, PolicyKind::network_pi,
                       PolicyKind::mcts}) {
    EXPECT_EQ(policy_from_string(to_string(k)), k);
  }
  EXPECT_THROW(policy_from_string("minisat"), std::invalid_argument);
}

TEST(PlayEpisode, RandomPolicyIsDeterministicPerSeed) {
  const Formula f = generate_uniform_3sat(20, 91, 11);
  const Policy random{PolicyKind::random};
  const Episode a = play_episode(SatGame(f), random, 99);
  const Episode b = play_episode(SatGame(f), random, 99);
  EXPECT_EQ(a.trace.actions, b.trace.actions);
  EXPECT_EQ(a.trace.observation_digests, b.trace.observation_digests);
  EXPECT_EQ(a.trace.to_json_line(), b.trace.to_json_line());
  bool differs = false;
  for (std::uint64_t s = 100; s < 110 && !differs; ++s) {
    differs = play_episode(SatGame(f), random, s).trace.actions != a.trace.actions;
  }
  EXPECT_TRUE(differs);
}

TEST(PlayEpisode, VsidsRefutesUnsatInstances) {
  LabeledSetOptions opts;
  opts.count_sat = 0;
  opts.count_unsat = 3;
  opts.seed = 21;
  for (const Formula& f : generate_labeled_set(opts)) {
    ASSERT_EQ(f.label(), Label::unsat);
    const Episode ep = play_episode(SatGame(f), Policy{PolicyKind::vsids}, 0);
    EXPECT_EQ(ep.outcome.verdict, Verdict::unsat) << f.id();
  }
}

TEST(PlayEpisode, TraceRecordsEveryMove) {
  const Formula f = generate_uniform_3sat(20, 91, 5);
  const Episode ep = play_episode(SatGame(f, {.d_cap = 200}), Policy{PolicyKind::random}, 3);
  ASSERT_EQ(ep.trace.actions.size(), static_cast<std::size_t>(ep.outcome.decisions));
  EXPECT_EQ(ep.trace.rewards.size(), ep.trace.actions.size());
  EXPECT_EQ(ep.trace.observation_digests.size(), ep.trace.actions.size());
  for (double r : ep.trace.rewards) EXPECT_DOUBLE_EQ(r, -1.0 / 200);
}

// With every weight zero and a constant q bias, all Q values tie, so the
// greedy policy always takes the lowest legal index: the lowest free
// variable, set false. Hand playout on
//   (x1 v x2) (x1 v -x2) (-x1 v x3 v x4) (-x3 v -x4):
//   -x1 forces x2 and falsifies clause 2, learning (x1); backjump, x1 = T.
//   -x2 (action 2) propagates nothing.
//   -x3 (action 4) forces x4 through clause 3; all clauses hold.
TEST(PlayEpisode, ConstantGreedyQMatchesHandPlayout) {
  const Formula f(4, {C({1, 2}), C({1, -2}), C({-1, 3, 4}), C({-3, -4})}, "hand");
  Network net(tiny_arch(4, 4, HeadKind::q), 1);
  for (auto& p : net.parameters()) p.value.fill(p.name == "q.b" ? 0.3 : 0.0);
  const auto q = net.forward_q(SatGame(f, {.max_clauses = 4}).observe());
  for (double v : q) ASSERT_EQ(v, 0.3);

  const Policy greedy{PolicyKind::greedy_q, &net};
  const Episode ep = play_episode(SatGame(f, {.max_clauses = 4}), greedy, 0);
  EXPECT_EQ(ep.trace.actions, (std::vector<int>{0, 2, 4}));
  EXPECT_EQ(ep.outcome.verdict, Verdict::sat);
  EXPECT_EQ(ep.outcome.decisions, 3);

  SatGame replay(f, {.max_clauses = 4});
  for (int a : ep.trace.actions) replay.step(Action::decode(a));
  EXPECT_EQ(replay.solver().model(), (Model{true, false, false, true}));
}

TEST(PlayEpisode, NetworkPoliciesNeedANetwork) {
  const Formula f = generate_uniform_3sat(4, 4, 1);
  for (PolicyKind k : {PolicyKind::greedy_q, PolicyKind::network_pi, PolicyKind::mcts}) {
    EXPECT_THROW(play_episode(SatGame(f, {.max_clauses = 4}), Policy{k}, 0), std::invalid_argument);
  }
}

// Any illegal proposal would throw IllegalAction out of play_episode.
TEST(PlayEpisode, BuiltInPoliciesOnlyPlayLegalMoves) {
  const Network q_net(tiny_arch(91, 20, HeadKind::q), 2);
  const Network pv_net(tiny_arch(91, 20, HeadKind::policy_value), 3);
  Policy mcts{PolicyKind::mcts, &pv_net};
  mcts.search.num_simulations = 8;
  const Policy policies[] = {Policy{PolicyKind::random}, Policy{PolicyKind::vsids},
                             Policy{PolicyKind::greedy_q, &q_net}, Policy{PolicyKind::network_pi, &pv_net}, mcts};
  int episodes = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Formula f = generate_uniform_3sat(20, 91, 1000 + s);
    const bool sat = brute_force_solve(f).sat;
    for (const Policy& p : policies) {
      Episode ep;
      ASSERT_NO_THROW(ep = play_episode(SatGame(f), p, s)) << to_string(p.kind);
      ASSERT_NE(ep.outcome.verdict, Verdict::truncated);
      EXPECT_EQ(ep.outcome.verdict == Verdict::sat, sat);
      ++episodes;
    }
  }
  EXPECT_EQ(episodes, 30);
}
