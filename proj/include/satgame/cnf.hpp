#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace satgame {

/// A literal over a 0-based variable index. DIMACS text uses 1-based signed
/// integers; conversion happens only in the parser and printer.
class Literal {
 public:
  constexpr Literal() = default;
  constexpr Literal(int var, bool negative) : code_(2 * var + (negative ? 1 : 0)) {}

  static constexpr Literal from_code(int code) {
    Literal l;
    l.code_ = code;
    return l;
  }
  static Literal from_dimacs(int value);

  constexpr int var() const { return code_ >> 1; }
  constexpr bool negative() const { return (code_ & 1) != 0; }
  constexpr bool positive() const { return !negative(); }
  constexpr int code() const { return code_; }
  constexpr int to_dimacs() const { return negative() ? -(var() + 1) : var() + 1; }

  constexpr Literal operator~() const { return from_code(code_ ^ 1); }
  constexpr auto operator<=>(const Literal&) const = default;

 private:
  int code_ = 0;
};

using Clause = std::vector<Literal>;

enum class Label { unknown, sat, unsat };

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

struct CnfError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable CNF instance.
class Formula {
 public:
  Formula() = default;
  /// Throws CnfError if a literal refers to a variable >= num_vars.
  Formula(int num_vars, std::vector<Clause> clauses, std::string id = {},
          Label label = Label::unknown);

  int num_vars() const { return num_vars_; }
  int num_clauses() const { return static_cast<int>(clauses_.size()); }
  const std::vector<Clause>& clauses() const { return clauses_; }
  const Clause& clause(int i) const { return clauses_[static_cast<std::size_t>(i)]; }
  const std::string& id() const { return id_; }
  Label label() const { return label_; }

  Formula with_label(Label label) const;
  Formula with_id(std::string id) const;
  /// Appends clauses (e.g. the negation of a lemma as units) to a copy.
  Formula with_clauses(const std::vector<Clause>& extra) const;

  /// Parser diagnostics. Neither affects semantics.
  bool had_duplicate_literals() const { return had_duplicates_; }
  bool has_tautology() const;

  /// Structural equality: variables, clause order and literal order. Id,
  /// label and diagnostics are metadata and not compared.
  bool operator==(const Formula& other) const {
    return num_vars_ == other.num_vars_ && clauses_ == other.clauses_;
  }

 private:
  friend Formula parse_dimacs(std::istream&, std::string);
  int num_vars_ = 0;
  std::vector<Clause> clauses_;
  std::string id_;
  Label label_ = Label::unknown;
  bool had_duplicates_ = false;
};

Formula parse_dimacs(std::istream& in, std::string id = {});
Formula parse_dimacs(std::string_view text, std::string id = {});
Formula read_dimacs_file(const std::filesystem::path& path);

void write_dimacs(std::ostream& out, const Formula& f);
std::string write_dimacs(const Formula& f);
void write_dimacs_file(const std::filesystem::path& path, const Formula& f);

/// Full assignment indexed by 0-based variable.
using Model = std::vector<bool>;

bool clause_satisfied(const Clause& c, const Model& m);
/// Direct evaluation of every clause; independent of any solver.
bool satisfies(const Formula& f, const Model& m);

/// Uniform random 3-SAT: three distinct variables per clause, fair-coin
/// polarities, duplicate clauses resampled. Throws CnfError when
/// num_vars < 3 or when more clauses are requested than exist.
Formula generate_uniform_3sat(int num_vars, int num_clauses, std::uint64_t seed);

inline constexpr int kBruteForceMaxVars = 24;

struct BruteForceResult {
  bool sat = false;
  Model witness;  // set only when sat
};

/// Exhaustive satisfiability check over all 2^num_vars assignments, 64 at a
/// time. Assignments are enumerated in increasing binary order with variable
/// 0 as the least significant bit, so the witness is the smallest model.
BruteForceResult brute_force_solve(const Formula& f);

struct LabeledSetOptions {
  int num_vars = 20;
  int num_clauses = 91;
  int count_sat = 16;
  int count_unsat = 16;
  std::uint64_t seed = 0;
  /// Cap on candidate draws before giving up.
  int max_candidates = 100000;
  std::string id_prefix = "uf";
};

/// Draws candidates until exactly count_sat SAT and count_unsat UNSAT
/// instances are collected. Output is in draw order; every formula carries
/// its oracle label and an id that includes the seed and draw index. When
/// `instance_seeds` is given it receives the generator seed of each formula.
std::vector<Formula> generate_labeled_set(const LabeledSetOptions& opts,
                                          std::vector<std::uint64_t>* instance_seeds = nullptr);

/// One manifest row; `path` is relative to the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string path;
  Label label = Label::unknown;
  std::uint64_t seed = 0;
};

struct InstanceSet {
  std::filesystem::path directory;
  std::vector<ManifestEntry> entries;
  std::vector<Formula> formulas;  // parallel to entries, labels attached
};

/// Writes `<dir>/<id>.cnf` for each formula plus `<dir>/manifest.json`.
void write_instance_set(const std::filesystem::path& dir, const std::vector<Formula>& formulas,
                        const std::vector<std::uint64_t>& instance_seeds);
/// Accepts either a directory holding manifest.json or the manifest path.
InstanceSet load_instance_set(const std::filesystem::path& dir_or_manifest);

}  // namespace satgame
