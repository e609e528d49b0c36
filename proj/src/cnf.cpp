#include "satgame/cnf.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "satgame/util.hpp"

namespace satgame {

Literal Literal::from_dimacs(int value) {
  if (value == 0) throw CnfError("literal 0 is the clause terminator");
  return value > 0 ? Literal(value - 1, false) : Literal(-value - 1, true);
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::sat: return "SAT";
    case Label::unsat: return "UNSAT";
    case Label::unknown: break;
  }
  return "unknown";
}

Label label_from_string(std::string_view s) {
  if (s == "SAT") return Label::sat;
  if (s == "UNSAT") return Label::unsat;
  if (s == "unknown") return Label::unknown;
  throw CnfError("unknown label '" + std::string(s) + "'");
}

Formula::Formula(int num_vars, std::vector<Clause> clauses, std::string id, Label label)
    : num_vars_(num_vars), clauses_(std::move(clauses)), id_(std::move(id)), label_(label) {
  if (num_vars_ < 0) throw CnfError("negative variable count");
  for (const auto& c : clauses_) {
    for (Literal l : c) {
      if (l.var() < 0 || l.var() >= num_vars_) {
        throw CnfError("literal " + std::to_string(l.to_dimacs()) + " out of range for " +
                       std::to_string(num_vars_) + " variables");
      }
    }
  }
}

Formula Formula::with_label(Label label) const {
  Formula f = *this;
  f.label_ = label;
  return f;
}

Formula Formula::with_id(std::string id) const {
  Formula f = *this;
  f.id_ = std::move(id);
  return f;
}

Formula Formula::with_clauses(const std::vector<Clause>& extra) const {
  auto clauses = clauses_;
  clauses.insert(clauses.end(), extra.begin(), extra.end());
  return Formula(num_vars_, std::move(clauses), id_, Label::unknown);
}

bool Formula::has_tautology() const {
  for (const auto& c : clauses_) {
    for (Literal l : c) {
      if (std::find(c.begin(), c.end(), ~l) != c.end()) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// DIMACS

namespace {

int parse_int(std::string_view tok, int line_no) {
  int v = 0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw CnfError("line " + std::to_string(line_no) + ": invalid integer '" + std::string(tok) +
                   "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Formula parse_dimacs(std::istream& in, std::string id) {
  Formula f;
  f.id_ = std::move(id);
  bool have_header = false;
  int declared_clauses = 0;
  Clause pending;
  bool pending_open = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0][0] == 'c') continue;
    // SATLIB files end with a "%" line followed by a stray "0".
    if (toks[0] == "%") break;
    if (toks[0] == "p") {
      if (have_header) throw CnfError("line " + std::to_string(line_no) + ": duplicate header");
      if (toks.size() != 4 || toks[1] != "cnf") {
        throw CnfError("line " + std::to_string(line_no) + ": malformed header");
      }
      f.num_vars_ = parse_int(toks[2], line_no);
      declared_clauses = parse_int(toks[3], line_no);
      if (f.num_vars_ < 0 || declared_clauses < 0) {
        throw CnfError("line " + std::to_string(line_no) + ": malformed header");
      }
      have_header = true;
      continue;
    }
    if (!have_header) throw CnfError("line " + std::to_string(line_no) + ": clause before header");
    for (auto tok : toks) {
      if (tok == "-0") throw CnfError("line " + std::to_string(line_no) + ": invalid literal -0");
      const int v = parse_int(tok, line_no);
      if (v == 0) {
        f.clauses_.push_back(std::move(pending));
        pending.clear();
        pending_open = false;
        continue;
      }
      if (std::abs(v) > f.num_vars_) {
        throw CnfError("line " + std::to_string(line_no) + ": variable " + std::to_string(std::abs(v)) +
                       " exceeds declared " + std::to_string(f.num_vars_));
      }
      const Literal lit = Literal::from_dimacs(v);
      if (std::find(pending.begin(), pending.end(), lit) != pending.end()) {
        f.had_duplicates_ = true;
      } else {
        pending.push_back(lit);
      }
      pending_open = true;
    }
  }
  if (!have_header) throw CnfError("missing 'p cnf' header");
  if (pending_open) throw CnfError("truncated final clause (missing terminating 0)");
  if (f.num_clauses() != declared_clauses) {
    throw CnfError("header declares " + std::to_string(declared_clauses) + " clauses, found " +
                   std::to_string(f.num_clauses()));
  }
  return f;
}

Formula parse_dimacs(std::string_view text, std::string id) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in, std::move(id));
}

Formula read_dimacs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CnfError("cannot open " + path.string());
  return parse_dimacs(in, path.stem().string());
}

void write_dimacs(std::ostream& out, const Formula& f) {
  out << "p cnf " << f.num_vars() << ' ' << f.num_clauses() << '\n';
  for (const auto& c : f.clauses()) {
    for (Literal l : c) out << l.to_dimacs() << ' ';
    out << "0\n";
  }
}

std::string write_dimacs(const Formula& f) {
  std::ostringstream out;
  write_dimacs(out, f);
  return out.str();
}

void write_dimacs_file(const std::filesystem::path& path, const Formula& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CnfError("cannot write " + path.string());
  write_dimacs(out, f);
}

// ---------------------------------------------------------------------------
// Evaluation and the exhaustive oracle

bool clause_satisfied(const Clause& c, const Model& m) {
  for (Literal l : c) {
    if (m[static_cast<std::size_t>(l.var())] == l.positive()) return true;
  }
  return false;
}

bool satisfies(const Formula& f, const Model& m) {
  if (static_cast<int>(m.size()) != f.num_vars()) return false;
  return std::all_of(f.clauses().begin(), f.clauses().end(),
                     [&](const Clause& c) { return clause_satisfied(c, m); });
}

BruteForceResult brute_force_solve(const Formula& f) {
  const int n = f.num_vars();
  if (n > kBruteForceMaxVars) {
    throw CnfError("brute force limited to " + std::to_string(kBruteForceMaxVars) + " variables");
  }
  // Bit j of a word is the assignment with low six variables = j.
  constexpr std::array<std::uint64_t, 6> kLow = {
      0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
      0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
  const std::uint64_t valid = n >= 6 ? ~0ULL : ((1ULL << (1 << n)) - 1);
  const std::uint64_t words = n > 6 ? (1ULL << (n - 6)) : 1;

  for (std::uint64_t w = 0; w < words; ++w) {
    std::uint64_t acc = valid;
    for (const auto& c : f.clauses()) {
      std::uint64_t sat = 0;
      for (Literal l : c) {
        const int v = l.var();
        const std::uint64_t val = v < 6 ? kLow[static_cast<std::size_t>(v)]
                                        : (((w >> (v - 6)) & 1ULL) ? ~0ULL : 0ULL);
        sat |= l.negative() ? ~val : val;
      }
      acc &= sat;
      if (acc == 0) break;
    }
    if (acc != 0) {
      const std::uint64_t index = w * 64 + static_cast<std::uint64_t>(std::countr_zero(acc));
      BruteForceResult r;
      r.sat = true;
      r.witness.resize(static_cast<std::size_t>(n));
      for (int v = 0; v < n; ++v) r.witness[static_cast<std::size_t>(v)] = ((index >> v) & 1ULL) != 0;
      return r;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Generators

Formula generate_uniform_3sat(int num_vars, int num_clauses, std::uint64_t seed) {
  if (num_vars < 3) throw CnfError("3-SAT generation needs at least 3 variables");
  if (num_clauses < 0) throw CnfError("negative clause count");
  const auto n = static_cast<std::uint64_t>(num_vars);
  const std::uint64_t distinct = n * (n - 1) * (n - 2) / 6 * 8;
  if (static_cast<std::uint64_t>(num_clauses) > distinct) {
    throw CnfError("requested " + std::to_string(num_clauses) + " distinct clauses but only " +
                   std::to_string(distinct) + " exist over " + std::to_string(num_vars) +
                   " variables");
  }
  Rng rng(seed);
  std::set<std::array<int, 3>> seen;
  std::vector<Clause> clauses;
  clauses.reserve(static_cast<std::size_t>(num_clauses));
  while (static_cast<int>(clauses.size()) < num_clauses) {
    std::array<int, 3> vars{};
    for (int i = 0; i < 3; ++i) {
      int v;
      do {
        v = static_cast<int>(rng.below(n));
      } while (std::find(vars.begin(), vars.begin() + i, v) != vars.begin() + i);
      vars[static_cast<std::size_t>(i)] = v;
    }
    std::sort(vars.begin(), vars.end());
    Clause c;
    std::array<int, 3> key{};
    for (int i = 0; i < 3; ++i) {
      const Literal l(vars[static_cast<std::size_t>(i)], rng.coin());
      c.push_back(l);
      key[static_cast<std::size_t>(i)] = l.code();
    }
    if (!seen.insert(key).second) continue;
    clauses.push_back(std::move(c));
  }
  return Formula(num_vars, std::move(clauses));
}

std::vector<Formula> generate_labeled_set(const LabeledSetOptions& opts,
                                          std::vector<std::uint64_t>* instance_seeds) {
  if (opts.num_vars > kBruteForceMaxVars) {
    throw CnfError("labeled sets need num_vars <= " + std::to_string(kBruteForceMaxVars));
  }
  if (opts.count_sat < 0 || opts.count_unsat < 0) throw CnfError("negative instance count");
  std::vector<Formula> out;
  if (instance_seeds) instance_seeds->clear();
  int have_sat = 0;
  int have_unsat = 0;
  for (int draw = 0; have_sat < opts.count_sat || have_unsat < opts.count_unsat; ++draw) {
    if (draw >= opts.max_candidates) {
      throw CnfError("candidate budget of " + std::to_string(opts.max_candidates) +
                     " draws exhausted");
    }
    const std::uint64_t s = derive_seed(opts.seed, static_cast<std::uint64_t>(draw));
    Formula f = generate_uniform_3sat(opts.num_vars, opts.num_clauses, s);
    const bool sat = brute_force_solve(f).sat;
    if (sat ? have_sat >= opts.count_sat : have_unsat >= opts.count_unsat) continue;
    (sat ? have_sat : have_unsat)++;
    char id[96];
    std::snprintf(id, sizeof id, "%s%d-%d-%llx-%05d", opts.id_prefix.c_str(), opts.num_vars,
                  opts.num_clauses, static_cast<unsigned long long>(opts.seed), draw);
    out.push_back(f.with_id(id).with_label(sat ? Label::sat : Label::unsat));
    if (instance_seeds) instance_seeds->push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instance sets

void write_instance_set(const std::filesystem::path& dir, const std::vector<Formula>& formulas,
                        const std::vector<std::uint64_t>& instance_seeds) {
  if (!instance_seeds.empty() && instance_seeds.size() != formulas.size()) {
    throw CnfError("seed list does not match formula list");
  }
  std::filesystem::create_directories(dir);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    const Formula& f = formulas[i];
    if (f.id().empty()) throw CnfError("instance without id");
    const std::string file = f.id() + ".cnf";
    write_dimacs_file(dir / file, f);
    rows.push_back({{"id", f.id()},
                    {"path", file},
                    {"label", to_string(f.label())},
                    {"seed", instance_seeds.empty() ? 0 : instance_seeds[i]}});
  }
  nlohmann::json manifest = {{"format", "satgame-instances"}, {"version", 1}, {"instances", rows}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw CnfError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

InstanceSet load_instance_set(const std::filesystem::path& dir_or_manifest) {
  namespace fs = std::filesystem;
  const fs::path manifest_path =
      fs::is_directory(dir_or_manifest) ? dir_or_manifest / "manifest.json" : dir_or_manifest;
  std::ifstream in(manifest_path);
  if (!in) throw CnfError("cannot open manifest " + manifest_path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CnfError("invalid manifest " + manifest_path.string() + ": " + e.what());
  }
  InstanceSet set;
  set.directory = manifest_path.parent_path();
  try {
    for (const auto& row : doc.at("instances")) {
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      e.path = row.at("path").get<std::string>();
      e.label = label_from_string(row.at("label").get<std::string>());
      e.seed = row.value("seed", std::uint64_t{0});
      Formula f = read_dimacs_file(set.directory / e.path).with_id(e.id).with_label(e.label);
      set.entries.push_back(std::move(e));
      set.formulas.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CnfError("invalid manifest " + manifest_path.string() + ": " + e.what());
  }
  return set;
}

}  // namespace satgame
