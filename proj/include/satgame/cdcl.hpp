#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "satgame/cnf.hpp"

namespace satgame {

enum class Value : std::int8_t { unassigned = 0, true_ = 1, false_ = -1 };

enum class SolverStatus { running, sat, unsat };

std::string_view to_string(SolverStatus s);

/// Index into the solver's clause store. Original clauses come first, in
/// formula order; learned clauses are appended.
using ClauseRef = int;
inline constexpr ClauseRef kNoReason = -1;

struct SolverOptions {
  double vsids_decay = 0.95;
  double vsids_bump = 1.0;
  /// Polarity returned by vsids_pick.
  bool default_negative = true;
  /// Conflicts before the first restart; 0 disables restarts.
  int restart_first = 0;
  double restart_growth = 1.5;
  /// Learned clauses kept before a reduction pass; 0 disables deletion.
  int max_learned = 0;
  /// Checks the watch invariant after every propagation fixpoint.
  bool check_invariants = false;
};

struct TrailEntry {
  Literal lit;
  int level = 0;
  ClauseRef reason = kNoReason;
};

struct LearnedClause {
  Clause literals;  // literals[0] is the asserting literal
  int backjump_level = 0;
};

/// Thrown when a decision violates the game rules (assigned variable, or
/// solver not running).
struct IllegalDecision : std::logic_error {
  using std::logic_error::logic_error;
};

/// CDCL engine with externally controlled branching: two-watched-literal
/// propagation, first-UIP learning, non-chronological backjumping and VSIDS
/// activities. Copyable; copies are independent.
class Solver {
 public:
  explicit Solver(std::shared_ptr<const Formula> formula, SolverOptions opts = {});
  explicit Solver(const Formula& formula, SolverOptions opts = {})
      : Solver(std::make_shared<const Formula>(formula), opts) {}

  const Formula& formula() const { return *formula_; }
  std::shared_ptr<const Formula> formula_ptr() const { return formula_; }
  const SolverOptions& options() const { return opts_; }

  SolverStatus status() const { return status_; }
  int num_vars() const { return formula_->num_vars(); }
  int decision_level() const { return static_cast<int>(level_start_.size()); }
  Value value(int var) const { return assigns_[static_cast<std::size_t>(var)]; }
  Value value(Literal l) const;
  int level(int var) const { return levels_[static_cast<std::size_t>(var)]; }
  ClauseRef reason(int var) const { return reasons_[static_cast<std::size_t>(var)]; }
  const std::vector<TrailEntry>& trail() const { return trail_; }
  int num_assigned() const { return static_cast<int>(trail_.size()); }

  int num_clauses() const { return static_cast<int>(headers_.size()); }
  std::span<const Literal> clause(ClauseRef c) const;
  bool is_learned(ClauseRef c) const { return headers_[static_cast<std::size_t>(c)].learned; }
  bool is_deleted(ClauseRef c) const { return headers_[static_cast<std::size_t>(c)].deleted; }
  /// Every clause learned so far, in learning order (deleted ones included).
  const std::vector<Clause>& learned_history() const { return learned_history_; }

  const std::vector<double>& activities() const { return activity_; }
  std::uint64_t conflicts() const { return conflicts_; }
  std::uint64_t decisions() const { return decisions_; }
  std::uint64_t propagations() const { return propagations_; }

  /// Unit propagation to fixpoint. Returns the falsified clause on conflict;
  /// a conflict at level 0 sets status to unsat.
  std::optional<ClauseRef> propagate();

  /// Opens a new decision level with `lit`. Throws IllegalDecision if the
  /// solver is not running or the variable is assigned.
  void decide(Literal lit);

  /// First-UIP analysis of a clause falsified by the current trail. Bumps
  /// the activity of every variable seen and decays afterwards.
  LearnedClause analyze_conflict(ClauseRef conflict);

  /// Undoes every assignment above `level`.
  void backjump(int level);

  /// Adds a learned clause after backjumping and enqueues its asserting
  /// literal. Returns the new clause reference.
  ClauseRef add_learned(const LearnedClause& lc);

  /// propagate/analyze/backjump/learn until a conflict-free fixpoint or a
  /// level-0 conflict, then sets status to sat if every variable is assigned.
  void settle();

  /// Unassigned variable with maximal activity, ties to the lowest index.
  Literal vsids_pick() const;

  /// Full assignment; valid once status() == sat.
  Model model() const;

  /// Debug scan: each attached clause is satisfied or both watches are
  /// non-false. Only meaningful at a conflict-free fixpoint.
  bool watch_invariant_holds() const;

  /// Digest of the full mutable state.
  std::uint64_t digest() const;

  /// One line per event: decide, imply, conflict, learn, backjump, restart.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  struct ClauseHeader {
    std::uint32_t offset = 0;
    std::uint32_t size = 0;
    bool learned = false;
    bool deleted = false;
  };

  Literal* lits(ClauseRef c) { return arena_.data() + headers_[static_cast<std::size_t>(c)].offset; }
  ClauseRef store_clause(const Clause& c, bool learned);
  void attach(ClauseRef c);
  void enqueue(Literal l, ClauseRef reason);
  void bump(int var);
  void maybe_restart();
  void reduce_learned();

  std::shared_ptr<const Formula> formula_;
  SolverOptions opts_;
  SolverStatus status_ = SolverStatus::running;

  std::vector<Literal> arena_;
  std::vector<ClauseHeader> headers_;
  std::vector<std::vector<ClauseRef>> watches_;  // by literal code: clauses watching that literal
  std::vector<Clause> learned_history_;

  std::vector<Value> assigns_;
  std::vector<int> levels_;
  std::vector<ClauseRef> reasons_;
  std::vector<TrailEntry> trail_;
  std::vector<int> level_start_;  // trail index where each decision level begins
  std::size_t qhead_ = 0;

  std::vector<double> activity_;
  double var_inc_ = 1.0;

  std::uint64_t conflicts_ = 0;
  std::uint64_t decisions_ = 0;
  std::uint64_t propagations_ = 0;
  std::uint64_t next_restart_ = 0;
  double restart_interval_ = 0;

  std::vector<char> seen_;  // scratch for analysis
  std::ostream* trace_ = nullptr;
};

/// Branching callback: returns the literal to decide. Called only while the
/// solver is running at a conflict-free fixpoint with a free variable.
using BranchingPolicy = std::function<Literal(const Solver&)>;

struct SolveResult {
  SolverStatus verdict = SolverStatus::running;
  Model model;  // set when verdict == sat
  std::uint64_t decisions_used = 0;
  std::uint64_t conflicts = 0;
};

/// Runs CDCL to completion. An illegal policy decision propagates as
/// IllegalDecision.
SolveResult solve(const Formula& f, const BranchingPolicy& policy, SolverOptions opts = {});
SolveResult solve_vsids(const Formula& f, SolverOptions opts = {});

}  // namespace satgame
