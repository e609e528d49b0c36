#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>

#include "satgame/cnf.hpp"
#include "satgame/util.hpp"

using namespace satgame;

namespace {

Literal L(int dimacs) { return Literal::from_dimacs(dimacs); }

Clause C(std::initializer_list<int> lits) {
  Clause c;
  for (int l : lits) c.push_back(L(l));
  return c;
}

// Per-assignment enumeration, kept deliberately naive as a check on the
// bit-parallel oracle.
bool naive_sat(const Formula& f) {
  const int n = f.num_vars();
  for (std::uint64_t a = 0; a < (1ULL << n); ++a) {
    Model m(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) m[static_cast<std::size_t>(v)] = (a >> v) & 1;
    if (satisfies(f, m)) return true;
  }
  return false;
}

Formula random_formula(Rng& rng, int max_vars, int max_clauses, int max_width) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_vars)));
  const int m = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_clauses) + 1));
  std::vector<Clause> clauses;
  for (int i = 0; i < m; ++i) {
    const int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_width)));
    Clause c;
    for (int k = 0; k < w; ++k) {
      const Literal l(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))), rng.coin());
      if (std::find(c.begin(), c.end(), l) == c.end()) c.push_back(l);
    }
    clauses.push_back(c);
  }
  return Formula(n, clauses);
}

}  // namespace

TEST(Literal, NegationIsAnInvolution) {
  for (int d : {1, -1, 7, -20}) {
    const Literal l = L(d);
    EXPECT_NE(l, ~l);
    EXPECT_EQ(l, ~~l);
    EXPECT_EQ(l.to_dimacs(), d);
  }
  EXPECT_THROW(L(0), CnfError);
}

TEST(Dimacs, ParsesTwoClauseExample) {
  const Formula f = parse_dimacs("p cnf 2 2\n1 -2 0\n2 0\n");
  EXPECT_EQ(f.num_vars(), 2);
  ASSERT_EQ(f.num_clauses(), 2);
  EXPECT_EQ(f.clause(0), C({1, -2}));
  EXPECT_EQ(f.clause(1), C({2}));
}

TEST(Dimacs, ParsesEmptyFormulaAndComments) {
  const Formula f = parse_dimacs("c hello\np cnf 1 0\n");
  EXPECT_EQ(f.num_vars(), 1);
  EXPECT_EQ(f.num_clauses(), 0);
}

TEST(Dimacs, ClausesMaySpanLinesAndSatlibTrailerIsIgnored) {
  const Formula f = parse_dimacs("p cnf 3 2\n1 2\n 3 0 -1\n0\n%\n0\n");
  ASSERT_EQ(f.num_clauses(), 2);
  EXPECT_EQ(f.clause(0), C({1, 2, 3}));
  EXPECT_EQ(f.clause(1), C({-1}));
}

TEST(Dimacs, Errors) {
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n3 0\n"), CnfError);          // var out of range
  EXPECT_THROW(parse_dimacs("p cnf x 1\n1 0\n"), CnfError);          // malformed header
  EXPECT_THROW(parse_dimacs("p dnf 1 1\n1 0\n"), CnfError);
  EXPECT_THROW(parse_dimacs("1 0\n"), CnfError);                     // no header
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 2\n"), CnfError);          // truncated clause
  EXPECT_THROW(parse_dimacs("p cnf 2 2\n1 2 0\n"), CnfError);        // count mismatch
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 -0 2 0\n"), CnfError);     // -0 in body
  EXPECT_THROW(parse_dimacs("p cnf 2 1\np cnf 2 1\n1 0\n"), CnfError);
}

TEST(Dimacs, DuplicateLiteralsAreDedupedAndFlagged) {
  const Formula f = parse_dimacs("p cnf 2 1\n1 1 -2 0\n");
  EXPECT_TRUE(f.had_duplicate_literals());
  EXPECT_EQ(f.clause(0), C({1, -2}));
  EXPECT_FALSE(f.has_tautology());
  EXPECT_TRUE(parse_dimacs("p cnf 2 1\n1 -1 0\n").has_tautology());
}

TEST(Dimacs, WritesCanonicalText) {
  EXPECT_EQ(write_dimacs(Formula(2, {C({1, -2})})), "p cnf 2 1\n1 -2 0\n");
  EXPECT_EQ(write_dimacs(Formula(1, {})), "p cnf 1 0\n");
}

TEST(Dimacs, RoundTripOnRandomFormulas) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Formula f = random_formula(rng, 15, 30, 5);
    EXPECT_EQ(parse_dimacs(write_dimacs(f)), f);
  }
}

TEST(Formula, RejectsOutOfRangeLiteral) {
  EXPECT_THROW(Formula(2, {C({3})}), CnfError);
}

TEST(Generator, ShapeOfUf20) {
  const Formula f = generate_uniform_3sat(20, 91, 5);
  EXPECT_EQ(f.num_vars(), 20);
  ASSERT_EQ(f.num_clauses(), 91);
  for (const auto& c : f.clauses()) {
    ASSERT_EQ(c.size(), 3u);
    EXPECT_NE(c[0].var(), c[1].var());
    EXPECT_NE(c[1].var(), c[2].var());
    EXPECT_NE(c[0].var(), c[2].var());
  }
}

TEST(Generator, DeterministicForSeed) {
  EXPECT_EQ(generate_uniform_3sat(20, 91, 42), generate_uniform_3sat(20, 91, 42));
  EXPECT_FALSE(generate_uniform_3sat(20, 91, 42) == generate_uniform_3sat(20, 91, 43));
}

TEST(Generator, NoDuplicateClausesAndExhaustion) {
  // Over 3 variables there are exactly 2^3 = 8 distinct clauses.
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Formula f = generate_uniform_3sat(3, 8, s);
    std::set<Clause> distinct(f.clauses().begin(), f.clauses().end());
    EXPECT_EQ(distinct.size(), 8u);
  }
  EXPECT_THROW(generate_uniform_3sat(3, 9, 1), CnfError);
  EXPECT_THROW(generate_uniform_3sat(2, 1, 1), CnfError);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Formula f = generate_uniform_3sat(8, 56, s);
    std::set<Clause> distinct(f.clauses().begin(), f.clauses().end());
    EXPECT_EQ(distinct.size(), 56u);
  }
}

TEST(Generator, PolarityMarginalsAreFair) {
  std::map<int, std::pair<int, int>> counts;  // var -> (positive, total)
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Formula f = generate_uniform_3sat(20, 91, s);
    for (const auto& c : f.clauses()) {
      for (Literal l : c) {
        counts[l.var()].first += l.positive();
        counts[l.var()].second += 1;
      }
    }
  }
  ASSERT_EQ(counts.size(), 20u);
  for (const auto& [v, pc] : counts) {
    EXPECT_NEAR(static_cast<double>(pc.first) / pc.second, 0.5, 0.02) << "var " << v;
  }
}

TEST(BruteForce, SmallCases) {
  EXPECT_FALSE(brute_force_solve(Formula(2, {C({1, 2}), C({-1}), C({-2})})).sat);
  const auto empty = brute_force_solve(Formula(3, {}));
  ASSERT_TRUE(empty.sat);
  EXPECT_EQ(empty.witness, Model(3, false));
  EXPECT_FALSE(brute_force_solve(Formula(1, {Clause{}})).sat);
  EXPECT_THROW(brute_force_solve(Formula(25, {})), CnfError);
}

TEST(BruteForce, AgreesWithNaiveEnumeration) {
  Rng rng(3);
  int sat = 0;
  for (int i = 0; i < 400; ++i) {
    const Formula f = random_formula(rng, 10, 40, 4);
    const auto r = brute_force_solve(f);
    ASSERT_EQ(r.sat, naive_sat(f)) << write_dimacs(f);
    if (r.sat) {
      ++sat;
      EXPECT_TRUE(satisfies(f, r.witness));
    }
  }
  EXPECT_GT(sat, 50);
  EXPECT_LT(sat, 350);
}

TEST(LabeledSet, LowRatioIsAllSat) {
  const auto set = generate_labeled_set({.num_vars = 10, .num_clauses = 20, .count_sat = 4,
                                         .count_unsat = 0, .seed = 9});
  ASSERT_EQ(set.size(), 4u);
  for (const auto& f : set) {
    EXPECT_EQ(f.label(), Label::sat);
    EXPECT_TRUE(brute_force_solve(f).sat);
  }
}

TEST(LabeledSet, TrainingSetShapeAndLabels) {
  std::vector<std::uint64_t> seeds;
  const auto set = generate_labeled_set({.count_sat = 16, .count_unsat = 16, .seed = 1}, &seeds);
  ASSERT_EQ(set.size(), 32u);
  ASSERT_EQ(seeds.size(), 32u);
  int sat = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& f = set[i];
    EXPECT_EQ(f.num_vars(), 20);
    EXPECT_EQ(f.num_clauses(), 91);
    EXPECT_EQ(f.label() == Label::sat, brute_force_solve(f).sat);
    EXPECT_EQ(generate_uniform_3sat(20, 91, seeds[i]), f);
    sat += f.label() == Label::sat;
    ids.insert(f.id());
  }
  EXPECT_EQ(sat, 16);
  EXPECT_EQ(ids.size(), 32u);
}

TEST(LabeledSet, CandidateBudget) {
  EXPECT_THROW(generate_labeled_set({.num_vars = 10, .num_clauses = 10, .count_sat = 0,
                                     .count_unsat = 3, .seed = 2, .max_candidates = 20}),
               CnfError);
}

TEST(InstanceSet, WriteAndLoad) {
  const auto dir = std::filesystem::temp_directory_path() / "satgame_test_instances";
  std::filesystem::remove_all(dir);
  std::vector<std::uint64_t> seeds;
  const auto set = generate_labeled_set({.num_vars = 8, .num_clauses = 30, .count_sat = 3,
                                         .count_unsat = 2, .seed = 4},
                                        &seeds);
  write_instance_set(dir, set, seeds);
  const auto loaded = load_instance_set(dir);
  ASSERT_EQ(loaded.formulas.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(loaded.formulas[i], set[i]);
    EXPECT_EQ(loaded.formulas[i].id(), set[i].id());
    EXPECT_EQ(loaded.formulas[i].label(), set[i].label());
    EXPECT_EQ(loaded.entries[i].seed, seeds[i]);
  }
  std::filesystem::remove_all(dir);
}
