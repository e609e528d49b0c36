#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "satgame/mcts.hpp"

using namespace satgame;

namespace {

Clause C(std::initializer_list<int> lits) {
  Clause c;
  for (int l : lits) c.push_back(Literal::from_dimacs(l));
  return c;
}

Edge edge(int action, int n, double w, double p) {
  Edge e;
  e.action = action;
  e.n = n;
  e.w = w;
  e.prior = e.raw_prior = p;
  return e;
}

// Fewest decisions needed to finish from g, by exhaustive enumeration.
int min_decisions(const SatGame& g) {
  if (g.terminal()) return 0;
  int best = 1 << 20;
  const auto mask = g.legal_actions();
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    SatGame next = g;
    next.step(Action::decode(static_cast<int>(a)));
    best = std::min(best, 1 + min_decisions(next));
  }
  return best;
}

Architecture small_arch() {
  Architecture a;
  a.conv_filters = {4};
  a.dense_units = 16;
  return a;
}

}  // namespace

TEST(Puct, UnvisitedNodeFollowsPrior) {
  const std::vector<Edge> e{edge(0, 0, 0, 0.2), edge(1, 0, 0, 0.5), edge(2, 0, 0, 0.3)};
  // With sum N = 0 every score is 0; the lowest index wins the tie.
  EXPECT_EQ(puct_select(e, 1.5), 0);
  const std::vector<Edge> f{edge(0, 1, 0, 0.2), edge(1, 0, 0, 0.5), edge(2, 0, 0, 0.3)};
  EXPECT_EQ(puct_select(f, 1.5), 1);
}

TEST(Puct, ValueDominatesWithManyVisits) {
  const std::vector<Edge> e{edge(0, 500, 250, 0.5), edge(1, 500, -250, 0.5)};
  EXPECT_EQ(puct_select(e, 1.5), 0);
}

TEST(Puct, HandComputedThreeActionNode) {
  const std::vector<Edge> e{edge(0, 4, 2, 0.2), edge(1, 2, -1, 0.3), edge(2, 0, 0, 0.5)};
  // Scores: 0.5 + 1.5*0.2*sqrt(6)/5, -0.5 + 1.5*0.3*sqrt(6)/3, 1.5*0.5*sqrt(6)/1.
  const double s6 = std::sqrt(6.0);
  EXPECT_NEAR(0.5 + 1.5 * 0.2 * s6 / 5, 0.5 + 0.147, 1e-3);
  EXPECT_NEAR(-0.5 + 1.5 * 0.3 * s6 / 3, -0.5 + 0.367, 1e-3);
  EXPECT_NEAR(1.5 * 0.5 * s6, 1.837, 1e-3);
  EXPECT_EQ(puct_select(e, 1.5), 2);
  EXPECT_THROW(puct_select(std::vector<Edge>{}, 1.5), std::logic_error);
}

TEST(Backup, AccumulatesMeans) {
  Edge a = edge(0, 0, 0, 1.0);
  Edge* path[] = {&a};
  backup(path, 0.8);
  EXPECT_EQ(a.n, 1);
  EXPECT_DOUBLE_EQ(a.q(), 0.8);
  backup(path, 0.2);
  EXPECT_EQ(a.n, 2);
  EXPECT_DOUBLE_EQ(a.q(), 0.5);
}

TEST(PolicyFromVisits, Examples) {
  const std::vector<int> n{10, 30, 60};
  const auto p1 = policy_from_visits(n, 1.0);
  EXPECT_NEAR(p1[0], 0.1, 1e-15);
  EXPECT_NEAR(p1[1], 0.3, 1e-15);
  EXPECT_NEAR(p1[2], 0.6, 1e-15);
  EXPECT_EQ(policy_from_visits(n, 0.0), (std::vector<double>{0, 0, 1}));
  const auto cold = policy_from_visits(n, 0.01);
  EXPECT_NEAR(cold[2], 1.0, 1e-12);
  EXPECT_EQ(policy_from_visits(std::vector<int>{5, 5}, 1.0), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(policy_from_visits(std::vector<int>{0, 7, 7}, 0.0), (std::vector<double>{0, 1, 0}));
  EXPECT_THROW(policy_from_visits(std::vector<int>{0, 0}, 1.0), std::invalid_argument);
}

TEST(Search, RootIsNeverMutatedAndVisitsAreConserved) {
  const Network net(small_arch(), 1);
  const NetworkEvaluator eval(net);
  SatGame g(generate_uniform_3sat(20, 91, 5));
  g.step(g.vsids_action());
  const auto before = g.digest();
  SearchConfig cfg;
  cfg.num_simulations = 60;
  Mcts m(eval, cfg, 2);
  const auto r = m.search(g, true);
  EXPECT_EQ(g.digest(), before);
  EXPECT_EQ(std::accumulate(r.visits.begin(), r.visits.end(), 0), 60);
  const auto mask = g.legal_actions();
  double total = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) EXPECT_EQ(r.pi[a], 0.0);
    total += r.pi[a];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GE(r.root_value, -1.0);
  EXPECT_LE(r.root_value, 1.0);
  // Below the root, an expanded node's visits equal its incoming edge's
  // count minus the visit that expanded it.
  std::function<void(int)> check = [&](int id) {
    for (const auto& e : m.node(id).edges) {
      if (e.child < 0) continue;
      const auto& child = m.node(e.child);
      if (!child.terminal) EXPECT_EQ(child.visits(), e.n - 1);
      if (e.n > 0) {
        EXPECT_GE(e.q(), -1.0);
        EXPECT_LE(e.q(), 1.0);
      }
      check(e.child);
    }
  };
  check(0);
}

TEST(Search, SingleFreeVariableKeepsMassOnIt) {
  // Actions come in polarity pairs, so the smallest legal set is one
  // variable's two literals.
  SatGame one(Formula(3, {C({-1}), C({2})}));
  ASSERT_EQ(one.observe().num_legal(), 2);
  const UniformEvaluator uni;
  SearchConfig cfg;
  for (int sims : {1, 7, 50}) {
    cfg.num_simulations = sims;
    const auto r = run_search(one, uni, cfg, 3);
    EXPECT_NEAR(r.pi[4] + r.pi[5], 1.0, 1e-12);
    const auto greedy = policy_from_visits(r.visits, 0.0);
    EXPECT_EQ(greedy[4] + greedy[5], 1.0);
  }
}

TEST(Search, TerminalRootThrows) {
  SatGame g(Formula(1, {C({1})}));
  ASSERT_TRUE(g.terminal());
  const UniformEvaluator uni;
  EXPECT_THROW(run_search(g, uni, {}, 1), std::logic_error);
}

TEST(Search, NoiseKeepsPriorsNormalized) {
  const UniformEvaluator uni;
  SatGame g(generate_uniform_3sat(20, 91, 8));
  SearchConfig cfg;
  cfg.num_simulations = 5;
  Mcts noisy(uni, cfg, 4);
  noisy.search(g, true);
  double total = 0;
  bool moved = false;
  for (const auto& e : noisy.root().edges) {
    total += e.prior;
    moved = moved || e.prior != e.raw_prior;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_TRUE(moved);

  cfg.dirichlet_epsilon = 0.0;
  Mcts clean(uni, cfg, 4);
  clean.search(g, true);
  for (const auto& e : clean.root().edges) EXPECT_EQ(e.prior, e.raw_prior);
}

TEST(Search, TreeReuseKeepsChildStatistics) {
  const UniformEvaluator uni;
  SatGame g(generate_uniform_3sat(20, 91, 9));
  SearchConfig cfg;
  cfg.num_simulations = 80;
  Mcts m(uni, cfg, 5);
  const auto r = m.search(g, false);
  const int a = static_cast<int>(std::max_element(r.visits.begin(), r.visits.end()) - r.visits.begin());
  g.step(Action::decode(a));
  m.advance(Action::decode(a));
  if (g.terminal()) GTEST_SKIP();
  EXPECT_EQ(m.root().visits(), r.visits[a] - 1);
  const auto r2 = m.search(g, false);
  EXPECT_EQ(std::accumulate(r2.visits.begin(), r2.visits.end(), 0), r.visits[a] - 1 + 80);
}

TEST(Search, FindsOneDecisionWinOnToyFormula) {
  // +x1 forces x2, x3, x4 and satisfies everything; other openings need more.
  const Formula f(4, {C({-1, 2}), C({-1, 3}), C({-1, 4}), C({1, 2, -3}), C({1, -2, 4}),
                      C({1, 3, -4}), C({2, 3, 4})});
  SatGame g(f, {.d_cap = 40});
  SatGame win = g;
  win.step({0, true});
  ASSERT_TRUE(win.terminal());
  ASSERT_EQ(min_decisions(g), 1);
  const UniformEvaluator uni;
  SearchConfig cfg;
  cfg.num_simulations = 200;
  const auto r = run_search(g, uni, cfg, 6, false);
  EXPECT_EQ(std::max_element(r.visits.begin(), r.visits.end()) - r.visits.begin(), 1);
}

TEST(SearchConfig, Validation) {
  SearchConfig c;
  c.num_simulations = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.c_puct = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.dirichlet_epsilon = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  EXPECT_EQ(SearchConfig::from_json(c.to_json()).to_json(), c.to_json());
}
