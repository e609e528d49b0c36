#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "satgame/cdcl.hpp"
#include "satgame/util.hpp"

namespace satgame {

/// A branching move. Flat encoding: index = 2 * var + (positive ? 1 : 0),
/// with var 0-based.
struct Action {
  int var = 0;
  bool positive = false;

  static constexpr Action decode(int index) { return {index >> 1, (index & 1) != 0}; }
  static constexpr Action from_literal(Literal l) { return {l.var(), l.positive()}; }
  constexpr int index() const { return 2 * var + (positive ? 1 : 0); }
  constexpr Literal literal() const { return Literal(var, !positive); }
  constexpr bool operator==(const Action&) const = default;
};

using ActionMask = std::vector<std::uint8_t>;

/// Residual clause/variable incidence matrix of shape rows x vars x 2 plus
/// the legal-action mask. Channel 0 marks a positive occurrence, channel 1
/// a negative one. Stored bit-packed; replay buffers hold many of these.
class Observation {
 public:
  Observation() = default;
  Observation(int rows, int vars);

  int rows() const { return rows_; }
  int vars() const { return vars_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * vars_ * 2; }

  bool at(int row, int var, int channel) const {
    const std::size_t i = index(row, var, channel);
    return (bits_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(int row, int var, int channel) {
    const std::size_t i = index(row, var, channel);
    bits_[i >> 6] |= 1ULL << (i & 63);
  }

  const ActionMask& mask() const { return mask_; }
  ActionMask& mask() { return mask_; }
  int num_actions() const { return 2 * vars_; }
  int num_legal() const;

  /// Dense row-major values in (row, var, channel) order.
  void write_dense(std::span<double> out) const;
  std::vector<double> dense() const;

  std::uint64_t digest() const;
  bool operator==(const Observation&) const = default;

  const std::vector<std::uint64_t>& packed_bits() const { return bits_; }
  static Observation from_packed(int rows, int vars, std::vector<std::uint64_t> bits,
                                 ActionMask mask);

 private:
  std::size_t index(int row, int var, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(vars_) +
            static_cast<std::size_t>(var)) * 2 + static_cast<std::size_t>(channel);
  }
  int rows_ = 0;
  int vars_ = 0;
  std::vector<std::uint64_t> bits_;
  ActionMask mask_;
};

/// Relabeling of a position: clause rows are permuted, variables are
/// permuted and some variables swap polarity. The formula it describes is
/// the same up to naming, though CDCL may propagate in a different order
/// after a conflict, so it is only an approximate game symmetry.
struct Symmetry {
  std::vector<int> row;             // row r moves to row[r]
  std::vector<int> var;             // variable v moves to var[v]
  std::vector<std::uint8_t> flip;   // nonzero: v's polarity is swapped

  static Symmetry identity(int rows, int vars);
  static Symmetry random(int rows, int vars, Rng& rng);

  Observation apply(const Observation& o) const;
  int apply(int action) const;
  /// Moves a per-action vector (policy target, logits) along with the actions.
  std::vector<double> apply(std::span<const double> per_action) const;
};

enum class Verdict { sat, unsat, truncated };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct GameOutcome {
  Verdict verdict = Verdict::truncated;
  int decisions = 0;
  double z = -1.0;
};

/// Value target for a finished game: 1 - 2 d / d_cap for solved games,
/// clipped to [-1, 1]; truncated games score -1.
double outcome_value(Verdict v, int decisions, int d_cap);

struct GameConfig {
  int d_cap = 200;
  int max_clauses = 91;  // observation rows; shorter formulas are zero-padded
  SolverOptions solver{};
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
};

struct SimulateResult {
  Observation observation;
  std::optional<GameOutcome> outcome;  // set when the simulated state is terminal
};

/// An action that is not legal in the current state. Carries the position of
/// the offending action for multi-action simulations.
struct IllegalAction : std::logic_error {
  IllegalAction(const std::string& what, int position = 0)
      : std::logic_error(what), position(position) {}
  int position;
};

/// The SAT game: each move is one branching decision; the solver then
/// propagates, learns and backjumps until the next branching point.
class SatGame {
 public:
  /// Resets to the initial position: solver built and propagated to fixpoint.
  /// Throws std::invalid_argument for d_cap < 1 or more clauses than rows.
  SatGame(std::shared_ptr<const Formula> formula, GameConfig cfg = {});
  SatGame(const Formula& formula, GameConfig cfg = {})
      : SatGame(std::make_shared<const Formula>(formula), cfg) {}

  const Formula& formula() const { return solver_.formula(); }
  const Solver& solver() const { return solver_; }
  const GameConfig& config() const { return cfg_; }
  int num_actions() const { return 2 * solver_.num_vars(); }
  int decisions() const { return decisions_; }
  bool terminal() const;

  ActionMask legal_actions() const;
  bool is_legal(Action a) const;

  /// Plays one decision. Throws IllegalAction and leaves the state untouched
  /// when `a` is not legal. Every decision earns -1/d_cap.
  StepResult step(Action a);

  /// Plays `actions` on a copy and reports where that line ends up. The game
  /// itself is never modified.
  SimulateResult simulate(std::span<const Action> actions) const;

  Observation observe() const;

  /// Throws std::logic_error if the game is not over.
  GameOutcome outcome() const;

  /// The move the VSIDS heuristic would make here.
  Action vsids_action() const;

  std::uint64_t digest() const;

 private:
  GameConfig cfg_;
  Solver solver_;
  int decisions_ = 0;
};

/// Replay/debug record of one episode; serialized as one JSON line.
struct EpisodeTrace {
  std::string instance_id;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint64_t> observation_digests;
  GameOutcome outcome;

  std::string to_json_line() const;
  static EpisodeTrace from_json_line(const std::string& line);
};

}  // namespace satgame
