#include <gtest/gtest.h>

#include <sstream>

#include "satgame/cdcl.hpp"
#include "satgame/util.hpp"

using namespace satgame;

namespace {

Literal L(int dimacs) { return Literal::from_dimacs(dimacs); }

Clause C(std::initializer_list<int> lits) {
  Clause c;
  for (int l : lits) c.push_back(L(l));
  return c;
}

Formula random_formula(Rng& rng, int max_vars) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_vars)));
  // Around the 3-SAT threshold so both verdicts are common.
  const int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(5 * n + 2)));
  std::vector<Clause> clauses;
  for (int i = 0; i < m; ++i) {
    const int w = 1 + static_cast<int>(rng.below(3));
    Clause c;
    for (int k = 0; k < w; ++k) {
      const Literal l(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), rng.coin());
      if (std::find(c.begin(), c.end(), l) == c.end()) c.push_back(l);
    }
    clauses.push_back(c);
  }
  return Formula(n, clauses);
}

Literal random_free(const Solver& s, Rng& rng) {
  std::vector<int> free;
  for (int v = 0; v < s.num_vars(); ++v) {
    if (s.value(v) == Value::unassigned) free.push_back(v);
  }
  return Literal(free[rng.below(free.size())], rng.coin());
}

// Each implied literal's reason has every other literal false, assigned
// earlier on the trail.
void expect_reasons_are_unit(const Solver& s) {
  std::vector<int> pos(static_cast<std::size_t>(s.num_vars()), -1);
  for (std::size_t i = 0; i < s.trail().size(); ++i) {
    pos[static_cast<std::size_t>(s.trail()[i].lit.var())] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < s.trail().size(); ++i) {
    const auto& e = s.trail()[i];
    if (e.reason == kNoReason) continue;
    bool has_self = false;
    for (Literal l : s.clause(e.reason)) {
      if (l == e.lit) {
        has_self = true;
        continue;
      }
      EXPECT_EQ(s.value(l), Value::false_);
      EXPECT_LT(pos[static_cast<std::size_t>(l.var())], static_cast<int>(i));
    }
    EXPECT_TRUE(has_self);
  }
}

}  // namespace

TEST(Solver, UnitClauseAssignedAtLevelZero) {
  Solver s(Formula(2, {C({1})}));
  s.settle();
  EXPECT_EQ(s.value(L(1)), Value::true_);
  EXPECT_EQ(s.level(0), 0);
  EXPECT_EQ(s.status(), SolverStatus::running);
}

TEST(Solver, EmptyClauseIsUnsat) {
  Solver s(Formula(1, {Clause{}}));
  EXPECT_EQ(s.status(), SolverStatus::unsat);
}

TEST(Solver, EmptyFormulaStartsRunning) {
  Solver s(Formula(2, {}));
  EXPECT_EQ(s.status(), SolverStatus::running);
  EXPECT_TRUE(s.trail().empty());
  s.settle();
  EXPECT_EQ(s.status(), SolverStatus::running);
}

TEST(Solver, ContradictoryUnitsAreUnsat) {
  Solver s(Formula(1, {C({1}), C({-1})}));
  s.settle();
  EXPECT_EQ(s.status(), SolverStatus::unsat);
}

TEST(Solver, PropagatesImplicationChain) {
  Solver s(Formula(3, {C({-1, 2}), C({-2, 3})}));
  s.settle();
  s.decide(L(1));
  EXPECT_FALSE(s.propagate().has_value());
  EXPECT_EQ(s.value(L(2)), Value::true_);
  EXPECT_EQ(s.value(L(3)), Value::true_);
  EXPECT_EQ(s.reason(1), 0);
  EXPECT_EQ(s.reason(2), 1);
  EXPECT_EQ(s.level(2), 1);
  const auto before = s.digest();
  EXPECT_FALSE(s.propagate().has_value());
  EXPECT_EQ(s.digest(), before);
}

TEST(Solver, DecideRejectsIllegalMoves) {
  Solver s(Formula(5, {C({1, 2})}));
  s.settle();
  s.decide(L(5));
  EXPECT_EQ(s.value(L(5)), Value::true_);
  EXPECT_EQ(s.decision_level(), 1);
  s.settle();
  EXPECT_THROW(s.decide(L(-5)), IllegalDecision);
  EXPECT_THROW(s.decide(Literal(9, false)), IllegalDecision);
  Solver done(Formula(1, {Clause{}}));
  EXPECT_THROW(done.decide(L(1)), IllegalDecision);
}

TEST(Solver, FirstUipOnTriangle) {
  Solver s(Formula(3, {C({-1, 2}), C({-1, 3}), C({-2, -3})}));
  s.settle();
  s.decide(L(1));
  const auto confl = s.propagate();
  ASSERT_TRUE(confl.has_value());
  const LearnedClause lc = s.analyze_conflict(*confl);
  EXPECT_EQ(lc.literals, C({-1}));
  EXPECT_EQ(lc.backjump_level, 0);
  s.backjump(0);
  s.add_learned(lc);
  EXPECT_FALSE(s.propagate().has_value());
  EXPECT_EQ(s.value(L(-1)), Value::true_);
}

TEST(Solver, AnalyzeRejectsLevelZero) {
  Solver s(Formula(2, {C({1, 2})}));
  EXPECT_THROW(s.analyze_conflict(0), std::logic_error);
}

TEST(Solver, BackjumpLearnsAssertingClause) {
  // x1 and x2 are independent; x3 conflicts only after both.
  Solver s(Formula(4, {C({-1, -2, 3}), C({-1, -2, 4}), C({-3, -4})}));
  s.settle();
  s.decide(L(1));
  ASSERT_FALSE(s.propagate());
  s.decide(L(2));
  const auto confl = s.propagate();
  ASSERT_TRUE(confl);
  const auto lc = s.analyze_conflict(*confl);
  EXPECT_EQ(lc.literals.size(), 2u);
  EXPECT_EQ(lc.literals[0], L(-2));
  EXPECT_EQ(lc.backjump_level, 1);
  EXPECT_THROW(s.backjump(2), std::logic_error);
  s.backjump(lc.backjump_level);
  EXPECT_EQ(s.decision_level(), 1);
  s.add_learned(lc);
  ASSERT_FALSE(s.propagate());
  EXPECT_EQ(s.value(L(-2)), Value::true_);
  EXPECT_EQ(s.level(1), 1);
  int assigned = 0;
  for (int v = 0; v < 4; ++v) assigned += s.value(v) != Value::unassigned;
  EXPECT_EQ(assigned, s.num_assigned());
}

TEST(Solver, VsidsTieBreakAndBump) {
  Solver fresh(Formula(3, {C({1, 2, 3})}));
  EXPECT_EQ(fresh.vsids_pick(), L(-1));

  // Conflict involving x2 and x3 only: both get bumped, x1 does not.
  Solver s(Formula(3, {C({-2, 3}), C({-2, -3})}));
  s.settle();
  s.decide(L(2));
  const auto confl = s.propagate();
  ASSERT_TRUE(confl);
  s.analyze_conflict(*confl);
  EXPECT_GT(s.activities()[1], 0.0);
  EXPECT_EQ(s.activities()[0], 0.0);
  s.backjump(0);
  EXPECT_EQ(s.vsids_pick().var(), 1);
}

TEST(Solver, VsidsArgmaxIsScaleInvariant) {
  Rng rng(5);
  const Formula f = generate_uniform_3sat(20, 91, 17);
  Solver s(f);
  s.settle();
  while (s.status() == SolverStatus::running && s.conflicts() < 5) {
    s.decide(random_free(s, rng));
    s.settle();
  }
  if (s.status() != SolverStatus::running) GTEST_SKIP();
  for (double scale : {1e-3, 1.0, 3.7, 1e50}) {
    int best = -1;
    for (int v = 0; v < 20; ++v) {
      if (s.value(v) != Value::unassigned) continue;
      if (best < 0 || s.activities()[v] * scale > s.activities()[best] * scale) best = v;
    }
    EXPECT_EQ(s.vsids_pick().var(), best);
  }
}

TEST(Solver, VsidsPickOnFinishedSolverThrows) {
  Solver s(Formula(1, {C({1})}));
  s.settle();
  EXPECT_EQ(s.status(), SolverStatus::sat);
  EXPECT_THROW(s.vsids_pick(), std::logic_error);
}

TEST(Solve, TrivialVerdicts) {
  const auto r = solve_vsids(Formula(2, {C({1, 2}), Clause{}}));
  EXPECT_EQ(r.verdict, SolverStatus::unsat);
  EXPECT_EQ(r.decisions_used, 0u);
  const auto forced = solve_vsids(Formula(3, {C({1}), C({-1, 2}), C({-2, -3})}));
  EXPECT_EQ(forced.verdict, SolverStatus::sat);
  EXPECT_EQ(forced.decisions_used, 0u);
  EXPECT_EQ(forced.model, (Model{true, true, false}));
}

TEST(Solve, IllegalPolicyDecisionPropagates) {
  const Formula f(3, {C({1, 2, 3}), C({-1, 2})});
  EXPECT_THROW(solve(f, [](const Solver&) { return Literal(0, false); }), IllegalDecision);
}

TEST(Solve, AgreesWithOracleOnRandomFormulas) {
  Rng rng(101);
  for (int i = 0; i < 300; ++i) {
    const Formula f = random_formula(rng, 12);
    const auto oracle = brute_force_solve(f);
    const auto r = solve_vsids(f, {.check_invariants = true});
    ASSERT_EQ(r.verdict == SolverStatus::sat, oracle.sat) << write_dimacs(f);
    if (r.verdict == SolverStatus::sat) EXPECT_TRUE(satisfies(f, r.model));
  }
}

TEST(Solve, RestartsAndDeletionStaySound) {
  Rng rng(7);
  const SolverOptions opts{.restart_first = 2, .max_learned = 3, .check_invariants = true};
  for (int i = 0; i < 100; ++i) {
    const Formula f = generate_uniform_3sat(14, 61, 1000 + static_cast<std::uint64_t>(i));
    const auto oracle = brute_force_solve(f);
    const auto r = solve(f, [&](const Solver& s) { return random_free(s, rng); }, opts);
    ASSERT_EQ(r.verdict == SolverStatus::sat, oracle.sat);
    if (oracle.sat) EXPECT_TRUE(satisfies(f, r.model));
  }
}

TEST(Solve, LearnedClausesAreImplied) {
  Rng rng(23);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Formula f = generate_uniform_3sat(20, 91, seed);
    Solver s(f);
    s.settle();
    while (s.status() == SolverStatus::running) {
      s.decide(random_free(s, rng));
      s.settle();
      expect_reasons_are_unit(s);
    }
    for (const Clause& learned : s.learned_history()) {
      std::vector<Clause> negation;
      for (Literal l : learned) negation.push_back({~l});
      EXPECT_FALSE(brute_force_solve(f.with_clauses(negation)).sat);
    }
  }
}

TEST(Solve, RandomPlayoutsTerminateWithOracleVerdict) {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Formula f = generate_uniform_3sat(20, 91, 500 + seed);
    const auto r = solve(f, [&](const Solver& s) { return random_free(s, rng); },
                         {.check_invariants = true});
    EXPECT_EQ(r.verdict == SolverStatus::sat, brute_force_solve(f).sat);
  }
}

TEST(Solver, ReplayIsDeterministic) {
  const Formula f = generate_uniform_3sat(20, 91, 77);
  Rng rng(1);
  std::vector<Literal> decisions;
  std::ostringstream trace1;
  Solver a(f);
  a.set_trace(&trace1);
  a.settle();
  while (a.status() == SolverStatus::running) {
    decisions.push_back(random_free(a, rng));
    a.decide(decisions.back());
    a.settle();
  }
  std::ostringstream trace2;
  Solver b(f);
  b.set_trace(&trace2);
  b.settle();
  for (Literal d : decisions) {
    b.decide(d);
    b.settle();
  }
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_EQ(a.learned_history(), b.learned_history());
  EXPECT_EQ(trace1.str(), trace2.str());
  EXPECT_NE(trace1.str().find("decide "), std::string::npos);
}

TEST(Solver, TraceFormat) {
  std::ostringstream trace;
  Solver s(Formula(3, {C({-1, 2}), C({-1, 3}), C({-2, -3})}));
  s.set_trace(&trace);
  s.settle();
  s.decide(L(1));
  s.settle();
  EXPECT_EQ(trace.str(),
            "decide 1 @1\n"
            "imply 2 @1 <- c0\n"
            "imply 3 @1 <- c1\n"
            "conflict c2 @1\n"
            "learn -1 0 bj 0\n"
            "backjump 0\n"
            "imply -1 @0 <- c3\n");
  EXPECT_EQ(s.status(), SolverStatus::running);
}
