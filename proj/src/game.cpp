#include "satgame/game.hpp"

#include <algorithm>
#include <bit>

#include "json.hpp"
#include "satgame/util.hpp"

namespace satgame {

// ---------------------------------------------------------------------------
// Observation

Observation::Observation(int rows, int vars)
    : rows_(rows),
      vars_(vars),
      bits_((static_cast<std::size_t>(rows) * static_cast<std::size_t>(vars) * 2 + 63) / 64, 0),
      mask_(static_cast<std::size_t>(2 * vars), 0) {
  if (rows < 0 || vars < 0) throw std::invalid_argument("Observation: negative shape");
}

Observation Observation::from_packed(int rows, int vars, std::vector<std::uint64_t> bits,
                                     ActionMask mask) {
  Observation o(rows, vars);
  if (bits.size() != o.bits_.size() || mask.size() != o.mask_.size()) {
    throw std::invalid_argument("Observation: packed data does not match shape");
  }
  o.bits_ = std::move(bits);
  o.mask_ = std::move(mask);
  return o;
}

int Observation::num_legal() const {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

void Observation::write_dense(std::span<double> out) const {
  if (out.size() != size()) throw std::invalid_argument("Observation: dense buffer size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    std::uint64_t word = bits_[w];
    while (word) {
      const int b = std::countr_zero(word);
      out[w * 64 + static_cast<std::size_t>(b)] = 1.0;
      word &= word - 1;
    }
  }
}

std::vector<double> Observation::dense() const {
  std::vector<double> v(size());
  write_dense(v);
  return v;
}

std::uint64_t Observation::digest() const {
  Digest d;
  d.value(rows_);
  d.value(vars_);
  d.range(std::span<const std::uint64_t>(bits_));
  d.range(std::span<const std::uint8_t>(mask_));
  return d.get();
}

// ---------------------------------------------------------------------------
// Symmetry

namespace {

std::vector<int> iota_perm(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  return p;
}

// Fisher-Yates on our own generator so the result is the same on every
// standard library.
void shuffle(std::vector<int>& p, Rng& rng) {
  for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
}

}  // namespace

Symmetry Symmetry::identity(int rows, int vars) {
  return {iota_perm(rows), iota_perm(vars), std::vector<std::uint8_t>(static_cast<std::size_t>(vars), 0)};
}

Symmetry Symmetry::random(int rows, int vars, Rng& rng) {
  Symmetry s = identity(rows, vars);
  shuffle(s.row, rng);
  shuffle(s.var, rng);
  for (auto& f : s.flip) f = static_cast<std::uint8_t>(rng.below(2));
  return s;
}

Observation Symmetry::apply(const Observation& o) const {
  if (static_cast<int>(row.size()) != o.rows() || static_cast<int>(var.size()) != o.vars()) {
    throw std::invalid_argument("Symmetry: observation shape mismatch");
  }
  Observation out(o.rows(), o.vars());
  for (int r = 0; r < o.rows(); ++r) {
    for (int v = 0; v < o.vars(); ++v) {
      const auto vi = static_cast<std::size_t>(v);
      for (int c = 0; c < 2; ++c) {
        if (o.at(r, v, c)) out.set(row[static_cast<std::size_t>(r)], var[vi], c ^ flip[vi]);
      }
    }
  }
  for (int a = 0; a < o.num_actions(); ++a) out.mask()[static_cast<std::size_t>(apply(a))] = o.mask()[static_cast<std::size_t>(a)];
  return out;
}

int Symmetry::apply(int action) const {
  const auto v = static_cast<std::size_t>(action >> 1);
  if (v >= var.size()) throw std::invalid_argument("Symmetry: action out of range");
  return 2 * var[v] + ((action & 1) ^ flip[v]);
}

std::vector<double> Symmetry::apply(std::span<const double> per_action) const {
  if (per_action.size() != 2 * var.size()) throw std::invalid_argument("Symmetry: per-action vector size mismatch");
  std::vector<double> out(per_action.size());
  for (std::size_t a = 0; a < per_action.size(); ++a) out[static_cast<std::size_t>(apply(static_cast<int>(a)))] = per_action[a];
  return out;
}

// ---------------------------------------------------------------------------
// Outcomes

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::sat: return "SAT";
    case Verdict::unsat: return "UNSAT";
    case Verdict::truncated: break;
  }
  return "truncated";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "SAT") return Verdict::sat;
  if (s == "UNSAT") return Verdict::unsat;
  if (s == "truncated") return Verdict::truncated;
  throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

double outcome_value(Verdict v, int decisions, int d_cap) {
  if (v == Verdict::truncated) return -1.0;
  return std::max(-1.0, 1.0 - 2.0 * decisions / d_cap);
}

// ---------------------------------------------------------------------------
// SatGame

namespace {

SolverOptions checked(const std::shared_ptr<const Formula>& f, const GameConfig& cfg) {
  if (!f) throw std::invalid_argument("SatGame: null formula");
  if (cfg.d_cap < 1) throw std::invalid_argument("SatGame: decision budget must be positive");
  if (f->num_clauses() > cfg.max_clauses) {
    throw std::invalid_argument("SatGame: formula has " + std::to_string(f->num_clauses()) +
                                " clauses, observation holds " + std::to_string(cfg.max_clauses));
  }
  return cfg.solver;
}

}  // namespace

SatGame::SatGame(std::shared_ptr<const Formula> formula, GameConfig cfg)
    : cfg_(cfg), solver_(formula, checked(formula, cfg)) {
  solver_.settle();
}

bool SatGame::terminal() const {
  return solver_.status() != SolverStatus::running || decisions_ >= cfg_.d_cap;
}

bool SatGame::is_legal(Action a) const {
  return !terminal() && a.var >= 0 && a.var < solver_.num_vars() &&
         solver_.value(a.var) == Value::unassigned;
}

ActionMask SatGame::legal_actions() const {
  ActionMask mask(static_cast<std::size_t>(num_actions()), 0);
  if (terminal()) return mask;
  for (int v = 0; v < solver_.num_vars(); ++v) {
    if (solver_.value(v) == Value::unassigned) {
      mask[static_cast<std::size_t>(2 * v)] = 1;
      mask[static_cast<std::size_t>(2 * v + 1)] = 1;
    }
  }
  return mask;
}

StepResult SatGame::step(Action a) {
  if (terminal()) throw IllegalAction("game is over");
  if (!is_legal(a)) {
    throw IllegalAction("illegal action " + std::to_string(a.index()) + " (variable " +
                        std::to_string(a.var + 1) + " is assigned or out of range)");
  }
  solver_.decide(a.literal());
  ++decisions_;
  solver_.settle();
  return {observe(), -1.0 / cfg_.d_cap, terminal()};
}

SimulateResult SatGame::simulate(std::span<const Action> actions) const {
  SatGame copy = *this;
  copy.solver_.set_trace(nullptr);
  for (std::size_t k = 0; k < actions.size(); ++k) {
    if (!copy.is_legal(actions[k])) {
      throw IllegalAction("illegal action " + std::to_string(actions[k].index()) +
                              " at position " + std::to_string(k) + " of simulation",
                          static_cast<int>(k));
    }
    copy.step(actions[k]);
  }
  SimulateResult r{copy.observe(), std::nullopt};
  if (copy.terminal()) r.outcome = copy.outcome();
  return r;
}

Observation SatGame::observe() const {
  const Formula& f = formula();
  Observation obs(cfg_.max_clauses, f.num_vars());
  for (int r = 0; r < f.num_clauses(); ++r) {
    const Clause& c = f.clause(r);
    const bool satisfied =
        std::any_of(c.begin(), c.end(), [&](Literal l) { return solver_.value(l) == Value::true_; });
    if (satisfied) continue;
    for (Literal l : c) {
      if (solver_.value(l.var()) == Value::unassigned) obs.set(r, l.var(), l.negative() ? 1 : 0);
    }
  }
  obs.mask() = legal_actions();
  return obs;
}

GameOutcome SatGame::outcome() const {
  if (!terminal()) throw std::logic_error("outcome of an unfinished game");
  GameOutcome o;
  switch (solver_.status()) {
    case SolverStatus::sat: o.verdict = Verdict::sat; break;
    case SolverStatus::unsat: o.verdict = Verdict::unsat; break;
    case SolverStatus::running: o.verdict = Verdict::truncated; break;
  }
  o.decisions = decisions_;
  o.z = outcome_value(o.verdict, o.decisions, cfg_.d_cap);
  return o;
}

Action SatGame::vsids_action() const { return Action::from_literal(solver_.vsids_pick()); }

std::uint64_t SatGame::digest() const {
  Digest d;
  d.value(solver_.digest());
  d.value(decisions_);
  d.value(cfg_.d_cap);
  return d.get();
}

// ---------------------------------------------------------------------------
// Episode traces

std::string EpisodeTrace::to_json_line() const {
  nlohmann::json j = {
      {"instance", instance_id},
      {"actions", actions},
      {"rewards", rewards},
      {"observation_digests", observation_digests},
      {"outcome",
       {{"verdict", to_string(outcome.verdict)}, {"decisions", outcome.decisions}, {"z", outcome.z}}}};
  return j.dump();
}

EpisodeTrace EpisodeTrace::from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EpisodeTrace t;
  t.instance_id = j.at("instance").get<std::string>();
  t.actions = j.at("actions").get<std::vector<int>>();
  t.rewards = j.at("rewards").get<std::vector<double>>();
  t.observation_digests = j.at("observation_digests").get<std::vector<std::uint64_t>>();
  const auto& o = j.at("outcome");
  t.outcome.verdict = verdict_from_string(o.at("verdict").get<std::string>());
  t.outcome.decisions = o.at("decisions").get<int>();
  t.outcome.z = o.at("z").get<double>();
  return t;
}

}  // namespace satgame
