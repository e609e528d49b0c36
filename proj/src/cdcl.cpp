#include "satgame/cdcl.hpp"

#include <algorithm>
#include <bit>
#include <cassert>

#include "satgame/util.hpp"

namespace satgame {

std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::sat: return "SAT";
    case SolverStatus::unsat: return "UNSAT";
    case SolverStatus::running: break;
  }
  return "running";
}

Solver::Solver(std::shared_ptr<const Formula> formula, SolverOptions opts)
    : formula_(std::move(formula)), opts_(opts) {
  if (!formula_) throw std::invalid_argument("Solver: null formula");
  if (opts_.vsids_decay <= 0.0 || opts_.vsids_decay > 1.0) {
    throw std::invalid_argument("Solver: vsids_decay must be in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(formula_->num_vars());
  assigns_.assign(n, Value::unassigned);
  levels_.assign(n, 0);
  reasons_.assign(n, kNoReason);
  activity_.assign(n, 0.0);
  seen_.assign(n, 0);
  watches_.resize(2 * n);
  restart_interval_ = opts_.restart_first;
  next_restart_ = static_cast<std::uint64_t>(opts_.restart_first);

  for (const Clause& original : formula_->clauses()) {
    Clause c;
    for (Literal l : original) {
      if (std::find(c.begin(), c.end(), l) == c.end()) c.push_back(l);
    }
    const ClauseRef ref = store_clause(c, false);
    if (c.empty()) {
      status_ = SolverStatus::unsat;
    } else if (c.size() == 1) {
      if (value(c[0]) == Value::false_) {
        status_ = SolverStatus::unsat;
      } else if (value(c[0]) == Value::unassigned) {
        enqueue(c[0], ref);
      }
    } else {
      attach(ref);
    }
  }
}

Value Solver::value(Literal l) const {
  const Value v = assigns_[static_cast<std::size_t>(l.var())];
  if (v == Value::unassigned || l.positive()) return v;
  return v == Value::true_ ? Value::false_ : Value::true_;
}

std::span<const Literal> Solver::clause(ClauseRef c) const {
  const auto& h = headers_[static_cast<std::size_t>(c)];
  return {arena_.data() + h.offset, h.size};
}

ClauseRef Solver::store_clause(const Clause& c, bool learned) {
  ClauseHeader h;
  h.offset = static_cast<std::uint32_t>(arena_.size());
  h.size = static_cast<std::uint32_t>(c.size());
  h.learned = learned;
  arena_.insert(arena_.end(), c.begin(), c.end());
  headers_.push_back(h);
  return static_cast<ClauseRef>(headers_.size() - 1);
}

void Solver::attach(ClauseRef c) {
  const Literal* l = lits(c);
  watches_[static_cast<std::size_t>(l[0].code())].push_back(c);
  watches_[static_cast<std::size_t>(l[1].code())].push_back(c);
}

void Solver::enqueue(Literal l, ClauseRef reason) {
  const auto v = static_cast<std::size_t>(l.var());
  assert(assigns_[v] == Value::unassigned);
  assigns_[v] = l.positive() ? Value::true_ : Value::false_;
  levels_[v] = decision_level();
  reasons_[v] = reason;
  trail_.push_back({l, decision_level(), reason});
  if (trace_) {
    if (reason == kNoReason) {
      *trace_ << "decide " << l.to_dimacs() << " @" << decision_level() << '\n';
    } else {
      *trace_ << "imply " << l.to_dimacs() << " @" << decision_level() << " <- c" << reason << '\n';
    }
  }
}

std::optional<ClauseRef> Solver::propagate() {
  if (status_ == SolverStatus::unsat) return std::nullopt;
  while (qhead_ < trail_.size()) {
    const Literal false_lit = ~trail_[qhead_++].lit;
    auto& ws = watches_[static_cast<std::size_t>(false_lit.code())];
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ws.size()) {
      const ClauseRef cref = ws[i++];
      Literal* c = lits(cref);
      const std::uint32_t size = headers_[static_cast<std::size_t>(cref)].size;
      if (c[0] == false_lit) std::swap(c[0], c[1]);
      if (value(c[0]) == Value::true_) {
        ws[j++] = cref;
        continue;
      }
      bool moved = false;
      for (std::uint32_t k = 2; k < size; ++k) {
        if (value(c[k]) != Value::false_) {
          std::swap(c[1], c[k]);
          watches_[static_cast<std::size_t>(c[1].code())].push_back(cref);
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[j++] = cref;
      if (value(c[0]) == Value::false_) {
        while (i < ws.size()) ws[j++] = ws[i++];
        ws.resize(j);
        qhead_ = trail_.size();
        if (trace_) *trace_ << "conflict c" << cref << " @" << decision_level() << '\n';
        if (decision_level() == 0) {
          status_ = SolverStatus::unsat;
          if (trace_) *trace_ << "unsat\n";
        }
        return cref;
      }
      ++propagations_;
      enqueue(c[0], cref);
    }
    ws.resize(j);
  }
  return std::nullopt;
}

void Solver::decide(Literal lit) {
  if (status_ != SolverStatus::running) throw IllegalDecision("decision on a finished game");
  if (lit.var() < 0 || lit.var() >= num_vars()) {
    throw IllegalDecision("decision on unknown variable " + std::to_string(lit.to_dimacs()));
  }
  if (assigns_[static_cast<std::size_t>(lit.var())] != Value::unassigned) {
    throw IllegalDecision("decision on assigned variable " + std::to_string(lit.var() + 1));
  }
  if (qhead_ != trail_.size()) throw std::logic_error("decide before propagation fixpoint");
  level_start_.push_back(static_cast<int>(trail_.size()));
  ++decisions_;
  enqueue(lit, kNoReason);
}

void Solver::bump(int var) {
  auto& a = activity_[static_cast<std::size_t>(var)];
  a += var_inc_ * opts_.vsids_bump;
  if (a > 1e100) {
    for (auto& x : activity_) x *= 1e-100;
    var_inc_ *= 1e-100;
  }
}

LearnedClause Solver::analyze_conflict(ClauseRef conflict) {
  if (decision_level() == 0) throw std::logic_error("analyze_conflict at decision level 0");
  LearnedClause out;
  out.literals.push_back(Literal{});  // asserting literal goes here
  int path_count = 0;
  std::optional<Literal> p;
  auto index = static_cast<std::ptrdiff_t>(trail_.size()) - 1;
  ClauseRef confl = conflict;
  do {
    assert(confl != kNoReason);
    for (Literal q : clause(confl)) {
      if (p && q.var() == p->var()) continue;
      const auto v = static_cast<std::size_t>(q.var());
      if (seen_[v] || levels_[v] == 0) continue;
      bump(q.var());
      seen_[v] = 1;
      if (levels_[v] >= decision_level()) {
        ++path_count;
      } else {
        out.literals.push_back(q);
      }
    }
    while (!seen_[static_cast<std::size_t>(trail_[static_cast<std::size_t>(index)].lit.var())]) --index;
    p = trail_[static_cast<std::size_t>(index)].lit;
    --index;
    confl = reasons_[static_cast<std::size_t>(p->var())];
    seen_[static_cast<std::size_t>(p->var())] = 0;
    --path_count;
  } while (path_count > 0);
  out.literals[0] = ~*p;
  for (Literal l : out.literals) seen_[static_cast<std::size_t>(l.var())] = 0;

  if (out.literals.size() > 1) {
    std::size_t best = 1;
    for (std::size_t i = 2; i < out.literals.size(); ++i) {
      if (levels_[static_cast<std::size_t>(out.literals[i].var())] >
          levels_[static_cast<std::size_t>(out.literals[best].var())]) {
        best = i;
      }
    }
    std::swap(out.literals[1], out.literals[best]);
    out.backjump_level = levels_[static_cast<std::size_t>(out.literals[1].var())];
  }
  ++conflicts_;
  var_inc_ /= opts_.vsids_decay;
  if (trace_) {
    *trace_ << "learn";
    for (Literal l : out.literals) *trace_ << ' ' << l.to_dimacs();
    *trace_ << " 0 bj " << out.backjump_level << '\n';
  }
  return out;
}

void Solver::backjump(int level) {
  if (level < 0 || level >= decision_level()) {
    throw std::logic_error("backjump target must be below the current decision level");
  }
  const auto start = static_cast<std::size_t>(level_start_[static_cast<std::size_t>(level)]);
  for (std::size_t i = start; i < trail_.size(); ++i) {
    const auto v = static_cast<std::size_t>(trail_[i].lit.var());
    assigns_[v] = Value::unassigned;
    reasons_[v] = kNoReason;
    levels_[v] = 0;
  }
  trail_.resize(start);
  level_start_.resize(static_cast<std::size_t>(level));
  qhead_ = trail_.size();
  if (trace_) *trace_ << "backjump " << level << '\n';
}

ClauseRef Solver::add_learned(const LearnedClause& lc) {
  if (lc.literals.empty()) throw std::logic_error("empty learned clause");
  if (value(lc.literals[0]) != Value::unassigned) {
    throw std::logic_error("asserting literal must be unassigned after backjump");
  }
  const ClauseRef ref = store_clause(lc.literals, true);
  learned_history_.push_back(lc.literals);
  if (lc.literals.size() >= 2) attach(ref);
  enqueue(lc.literals[0], ref);
  return ref;
}

void Solver::maybe_restart() {
  if (opts_.restart_first <= 0 || conflicts_ < next_restart_) return;
  restart_interval_ *= opts_.restart_growth;
  next_restart_ = conflicts_ + static_cast<std::uint64_t>(restart_interval_);
  if (decision_level() > 0) {
    if (trace_) *trace_ << "restart\n";
    backjump(0);
  }
}

void Solver::reduce_learned() {
  if (opts_.max_learned <= 0) return;
  std::vector<ClauseRef> live;
  for (ClauseRef c = formula_->num_clauses(); c < num_clauses(); ++c) {
    const auto& h = headers_[static_cast<std::size_t>(c)];
    if (h.deleted || h.size < 2) continue;
    const Literal first = arena_[h.offset];
    const bool locked = reasons_[static_cast<std::size_t>(first.var())] == c &&
                        value(first) == Value::true_;
    if (!locked) live.push_back(c);
  }
  if (static_cast<int>(live.size()) <= opts_.max_learned) return;
  // Drop the longer half; ties keep the newer clause.
  std::stable_sort(live.begin(), live.end(), [&](ClauseRef a, ClauseRef b) {
    return headers_[static_cast<std::size_t>(a)].size > headers_[static_cast<std::size_t>(b)].size;
  });
  for (std::size_t i = 0; i < live.size() / 2; ++i) {
    const ClauseRef c = live[i];
    auto& h = headers_[static_cast<std::size_t>(c)];
    h.deleted = true;
    for (int w = 0; w < 2; ++w) {
      auto& ws = watches_[static_cast<std::size_t>(arena_[h.offset + static_cast<std::uint32_t>(w)].code())];
      ws.erase(std::find(ws.begin(), ws.end(), c));
    }
  }
}

void Solver::settle() {
  while (status_ == SolverStatus::running) {
    const auto confl = propagate();
    if (!confl) break;
    if (status_ == SolverStatus::unsat) return;
    const LearnedClause lc = analyze_conflict(*confl);
    backjump(lc.backjump_level);
    add_learned(lc);
    maybe_restart();
    reduce_learned();
  }
  if (status_ != SolverStatus::running) return;
  if (opts_.check_invariants && !watch_invariant_holds()) {
    throw std::logic_error("watched-literal invariant violated");
  }
  if (num_assigned() == num_vars()) {
    status_ = SolverStatus::sat;
    if (trace_) *trace_ << "sat\n";
  }
}

Literal Solver::vsids_pick() const {
  if (status_ != SolverStatus::running) throw std::logic_error("vsids_pick on a finished solver");
  int best = -1;
  for (int v = 0; v < num_vars(); ++v) {
    if (assigns_[static_cast<std::size_t>(v)] != Value::unassigned) continue;
    if (best < 0 || activity_[static_cast<std::size_t>(v)] > activity_[static_cast<std::size_t>(best)]) {
      best = v;
    }
  }
  if (best < 0) throw std::logic_error("vsids_pick: no unassigned variable");
  return Literal(best, opts_.default_negative);
}

Model Solver::model() const {
  Model m(static_cast<std::size_t>(num_vars()));
  for (std::size_t v = 0; v < m.size(); ++v) m[v] = assigns_[v] == Value::true_;
  return m;
}

bool Solver::watch_invariant_holds() const {
  for (ClauseRef c = 0; c < num_clauses(); ++c) {
    const auto& h = headers_[static_cast<std::size_t>(c)];
    if (h.deleted || h.size < 2) continue;
    const auto cl = clause(c);
    for (int w = 0; w < 2; ++w) {
      const auto& ws = watches_[static_cast<std::size_t>(cl[static_cast<std::size_t>(w)].code())];
      if (std::find(ws.begin(), ws.end(), c) == ws.end()) return false;
    }
    const bool satisfied =
        std::any_of(cl.begin(), cl.end(), [&](Literal l) { return value(l) == Value::true_; });
    if (!satisfied && (value(cl[0]) == Value::false_ || value(cl[1]) == Value::false_)) return false;
  }
  return true;
}

std::uint64_t Solver::digest() const {
  Digest d;
  d.value(status_);
  for (const auto& e : trail_) {
    d.value(e.lit.code());
    d.value(e.level);
    d.value(e.reason);
  }
  d.range(std::span<const int>(level_start_));
  d.value(qhead_);
  d.range(std::span<const Literal>(arena_));
  for (const auto& h : headers_) {
    d.value(h.offset);
    d.value(h.size);
    d.value(h.learned);
    d.value(h.deleted);
  }
  for (const auto& ws : watches_) d.range(std::span<const ClauseRef>(ws));
  d.range(std::span<const Value>(assigns_));
  d.range(std::span<const double>(activity_));
  d.value(var_inc_);
  d.value(conflicts_);
  d.value(decisions_);
  d.value(propagations_);
  d.value(next_restart_);
  return d.get();
}

SolveResult solve(const Formula& f, const BranchingPolicy& policy, SolverOptions opts) {
  Solver s(f, opts);
  SolveResult r;
  s.settle();
  while (s.status() == SolverStatus::running) {
    const Literal lit = policy(s);
    ++r.decisions_used;
    s.decide(lit);
    s.settle();
  }
  r.verdict = s.status();
  r.conflicts = s.conflicts();
  if (r.verdict == SolverStatus::sat) r.model = s.model();
  return r;
}

SolveResult solve_vsids(const Formula& f, SolverOptions opts) {
  return solve(f, [](const Solver& s) { return s.vsids_pick(); }, opts);
}

}  // namespace satgame
