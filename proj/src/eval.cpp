#include "satgame/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "satgame/parallel.hpp"
#include "satgame/training.hpp"
#include "satgame/util.hpp"

namespace satgame {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void check_fits(const Policy& policy, const std::vector<Formula>& instances) {
  if (!policy.needs_network()) return;
  if (!policy.net) throw std::invalid_argument("policy " + std::string(to_string(policy.kind)) + " needs a checkpoint");
  const Architecture& a = policy.net->arch();
  const bool wants_q = policy.kind == PolicyKind::greedy_q;
  if ((a.head == HeadKind::q) != wants_q) {
    throw ShapeError("checkpoint has a " + std::string(to_string(a.head)) + " head, policy " +
                     std::string(to_string(policy.kind)) + " needs " + (wants_q ? "q" : "policy_value"));
  }
  for (const auto& f : instances) {
    if (f.num_vars() != a.vars || f.num_clauses() > a.rows) {
      throw ShapeError("instance " + f.id() + " (" + std::to_string(f.num_vars()) + " vars, " +
                       std::to_string(f.num_clauses()) + " clauses) does not fit a network built for " +
                       std::to_string(a.vars) + " vars and " + std::to_string(a.rows) + " clauses");
    }
  }
}

}  // namespace

nlohmann::json EvalReport::to_json(bool verbose) const {
  auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"policy", policy},
                      {"checkpoint", checkpoint},
                      {"set", set},
                      {"instances", instances},
                      {"solved", solved},
                      {"truncated", truncated},
                      {"solve_rate", solve_rate},
                      {"mean_decisions", opt(mean_decisions)},
                      {"median_decisions", opt(median_decisions)},
                      {"max_decisions", opt(max_decisions)}};
  if (verbose) {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows) {
      rs.push_back({{"id", r.id}, {"label", to_string(r.label)}, {"verdict", to_string(r.verdict)},
                    {"decisions", r.decisions}});
    }
    j["rows"] = rs;
  }
  return j;
}

EvalReport evaluate(const Policy& policy, const std::vector<Formula>& instances, const EvalOptions& opts) {
  check_fits(policy, instances);
  const auto start = std::chrono::steady_clock::now();
  GameConfig game{.d_cap = opts.d_cap};
  if (policy.net) game.max_clauses = policy.net->arch().rows;
  for (const auto& f : instances) game.max_clauses = std::max(game.max_clauses, f.num_clauses());

  EvalReport report;
  report.policy = std::string(to_string(policy.kind));
  report.rows.resize(instances.size());
  parallel_for(instances.size(), opts.threads, [&](std::size_t i) {
    const Formula& f = instances[i];
    const Episode ep = play_episode(SatGame(f, game), policy, derive_seed(opts.seed, f.id()));
    report.rows[i] = {f.id(), f.label(), ep.outcome.verdict, ep.outcome.decisions};
  });
  std::sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<int> solved;
  for (const auto& r : report.rows) {
    if (r.verdict == Verdict::truncated) {
      ++report.truncated;
      continue;
    }
    const bool sat = r.verdict == Verdict::sat;
    if ((r.label == Label::sat && !sat) || (r.label == Label::unsat && sat)) {
      throw SoundnessError("instance " + r.id + " is labeled " + std::string(to_string(r.label)) +
                           " but the solver concluded " + std::string(to_string(r.verdict)));
    }
    solved.push_back(r.decisions);
  }
  report.instances = static_cast<int>(report.rows.size());
  report.solved = static_cast<int>(solved.size());
  report.solve_rate = report.instances ? static_cast<double>(report.solved) / report.instances : 0.0;
  if (!solved.empty()) {
    std::sort(solved.begin(), solved.end());
    double total = 0.0;
    for (int d : solved) total += d;
    report.mean_decisions = total / static_cast<double>(solved.size());
    const std::size_t n = solved.size();
    report.median_decisions = n % 2 ? solved[n / 2] : 0.5 * (solved[n / 2 - 1] + solved[n / 2]);
    report.max_decisions = solved.back();
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string csv_row(const EvalReport& r) {
  return (r.checkpoint.empty() ? std::string("-") : r.checkpoint) + "," + r.set + "," + r.policy + "," +
         (r.mean_decisions ? fixed(*r.mean_decisions, 4) : "nan") + "," + fixed(r.solve_rate, 4) + "," +
         (r.median_decisions ? fixed(*r.median_decisions, 1) : "nan") + "," +
         (r.max_decisions ? std::to_string(*r.max_decisions) : "nan");
}

std::string sweep_checkpoints(const fs::path& run_dir, const std::vector<Formula>& train,
                              const std::vector<Formula>& test, const SweepOptions& opts) {
  check_disjoint(train, test);
  const RunDirectory run{run_dir};
  const auto ks = run.checkpoints();
  if (ks.empty()) throw std::runtime_error("no checkpoints in " + run_dir.string());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] != static_cast<int>(i)) {
      throw std::runtime_error("checkpoint model-" + std::to_string(i) + " is missing in " + run_dir.string());
    }
  }
  std::string csv = std::string(kSweepHeader) + "\n";
  const std::pair<const char*, const std::vector<Formula>*> sets[] = {{"train", &train}, {"test", &test}};
  for (int k : ks) {
    const Network net = Network::load(run.checkpoint(k));
    Policy p;
    p.kind = opts.policy.value_or(net.arch().head == HeadKind::q ? PolicyKind::greedy_q : PolicyKind::network_pi);
    p.net = &net;
    p.search = opts.search;
    for (const auto& [name, set] : sets) {
      EvalReport r = evaluate(p, *set, opts.eval);
      r.checkpoint = "model-" + std::to_string(k);
      r.set = name;
      csv += csv_row(r) + "\n";
    }
  }
  for (PolicyKind kind : {PolicyKind::vsids, PolicyKind::random}) {
    for (const auto& [name, set] : sets) {
      EvalReport r = evaluate(Policy{kind}, *set, opts.eval);
      r.set = name;
      csv += csv_row(r) + "\n";
    }
  }
  std::ofstream out(run.root / "metrics.csv", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (run.root / "metrics.csv").string());
  out << csv;
  return csv;
}

}  // namespace satgame
