// satgame: command-line front end for instance generation, solving,
// training and evaluation.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "satgame/eval.hpp"
#include "satgame/training.hpp"

using namespace satgame;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
}

std::vector<Formula> load_set(const std::string& dir) {
  if (!fs::exists(dir)) throw UsageError("instance set " + dir + " does not exist");
  return load_instance_set(dir).formulas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAT branching game: generate instances, solve, train and evaluate agents"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  int threads = 1;
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "Global random seed");
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a labeled uniform random 3-SAT set");
  LabeledSetOptions gen_opts;
  std::string gen_out;
  gen->add_option("--vars", gen_opts.num_vars, "Variables per formula");
  gen->add_option("--clauses", gen_opts.num_clauses, "Clauses per formula");
  gen->add_option("--sat", gen_opts.count_sat, "Number of satisfiable formulas");
  gen->add_option("--unsat", gen_opts.count_unsat, "Number of unsatisfiable formulas");
  gen->add_option("--prefix", gen_opts.id_prefix, "Instance id prefix");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Play one DIMACS file with a policy");
  std::string solve_policy = "vsids", solve_ckpt, solve_file;
  int solve_dcap = 200;
  solve->add_option("--policy", solve_policy, "random | vsids | greedy-q | network-pi | mcts");
  solve->add_option("--checkpoint", solve_ckpt, "Network checkpoint")->check(CLI::ExistingFile);
  solve->add_option("--d-cap", solve_dcap, "Decision budget");
  solve->add_option("file", solve_file, "DIMACS CNF file")->required()->check(CLI::ExistingFile);

  // train-deepq / train-zero
  std::string train_dir, test_dir, run_dir, resume_dir;
  std::optional<int> stop_after;
  bool write_episodes = false;
  std::optional<std::int64_t> steps;
  std::optional<int> iterations;
  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--train", train_dir, "Training instance set");
    c->add_option("--test", test_dir, "Test set (checked for overlap with --train)");
    c->add_option("--out", run_dir, "New run directory");
    c->add_option("--resume", resume_dir, "Continue the run in this directory");
    c->add_option("--stop-after", stop_after, "Stop once this checkpoint is written");
    c->add_flag("--episodes", write_episodes, "Write JSONL episode traces");
  };
  auto* tdq = app.add_subcommand("train-deepq", "Train a DeepQ agent");
  add_train_flags(tdq);
  tdq->add_option("--steps", steps, "Total environment steps");
  auto* tz = app.add_subcommand("train-zero", "Train an AlphaZero-style agent");
  add_train_flags(tz);
  tz->add_option("--iterations", iterations, "Self-play/training iterations");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a policy on an instance set");
  std::string ev_policy = "vsids", ev_ckpt, ev_set, ev_out;
  int ev_dcap = 200;
  bool verbose = false;
  ev->add_option("--policy", ev_policy, "random | vsids | greedy-q | network-pi | mcts");
  ev->add_option("--checkpoint", ev_ckpt, "Network checkpoint")->check(CLI::ExistingFile);
  ev->add_option("--set", ev_set, "Instance set directory or manifest")->required();
  ev->add_option("--d-cap", ev_dcap, "Decision budget");
  ev->add_option("--out", ev_out, "Write the report here instead of stdout");
  ev->add_flag("--verbose", verbose, "Include per-instance rows");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Evaluate every checkpoint of a run plus baselines");
  std::string sw_run, sw_train, sw_test, sw_policy;
  int sw_dcap = 200;
  sw->add_option("--run", sw_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  sw->add_option("--train", sw_train, "Training set (default: the run's copy)");
  sw->add_option("--test", sw_test, "Test set")->required();
  sw->add_option("--policy", sw_policy, "Checkpoint policy (default by algorithm)");
  sw->add_option("--d-cap", sw_dcap, "Decision budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const nlohmann::json config = read_config(config_path);

    if (*gen) {
      gen_opts.seed = seed;
      std::vector<std::uint64_t> seeds;
      const auto formulas = generate_labeled_set(gen_opts, &seeds);
      write_instance_set(gen_out, formulas, seeds);
      std::cout << "wrote " << formulas.size() << " instances to " << gen_out << "\n";
      return 0;
    }

    if (*solve) {
      const Formula f = read_dimacs_file(solve_file);
      Policy p{policy_from_string(solve_policy)};
      std::optional<Network> net;
      if (p.needs_network()) {
        if (solve_ckpt.empty()) throw UsageError("--policy " + solve_policy + " needs --checkpoint");
        net = Network::load(solve_ckpt);
        p.net = &*net;
      }
      if (config.contains("search")) p.search = SearchConfig::from_json(config.at("search"));
      GameConfig game{.d_cap = solve_dcap};
      game.max_clauses = std::max(net ? net->arch().rows : game.max_clauses, f.num_clauses());
      if (net && (net->arch().vars != f.num_vars() || net->arch().rows < f.num_clauses())) {
        throw ShapeError("formula does not fit the checkpoint's input shape");
      }
      SatGame env(f, game);
      const Episode ep = play_episode(env, p, derive_seed(seed, f.id()));
      std::cout << to_string(ep.outcome.verdict) << "\n";
      if (ep.outcome.verdict == Verdict::sat) {
        // Replay to recover the model.
        SatGame replay(f, game);
        for (int a : ep.trace.actions) replay.step(Action::decode(a));
        const Model m = replay.solver().model();
        std::cout << "v";
        for (std::size_t v = 0; v < m.size(); ++v) std::cout << ' ' << (m[v] ? "" : "-") << v + 1;
        std::cout << " 0\n";
      }
      std::cout << "decisions " << ep.outcome.decisions << "\n";
      return 0;
    }

    if (*tdq || *tz) {
      TrainOptions opts{threads, stop_after, write_episodes};
      std::vector<fs::path> written;
      if (!resume_dir.empty()) {
        written = resume_training(resume_dir, opts);
      } else {
        if (train_dir.empty() || run_dir.empty()) throw UsageError("training needs --train and --out (or --resume)");
        const auto train = load_set(train_dir);
        if (!test_dir.empty()) check_disjoint(train, load_set(test_dir));
        if (*tdq) {
          DeepQConfig cfg = DeepQConfig::from_json(config);
          if (seed_given) cfg.seed = seed;
          if (steps) cfg.total_env_steps = *steps;
          cfg.validate();
          written = deepq_train(cfg, train, run_dir, opts);
        } else {
          ZeroConfig cfg = ZeroConfig::from_json(config);
          if (seed_given) cfg.seed = seed;
          if (iterations) cfg.iterations = *iterations;
          cfg.validate();
          written = alphazero_train(cfg, train, run_dir, opts);
        }
      }
      for (const auto& p : written) std::cout << p.string() << "\n";
      return 0;
    }

    if (*ev) {
      Policy p{policy_from_string(ev_policy)};
      std::optional<Network> net;
      if (p.needs_network()) {
        if (ev_ckpt.empty()) throw UsageError("--policy " + ev_policy + " needs --checkpoint");
        net = Network::load(ev_ckpt);
        p.net = &*net;
      }
      if (config.contains("search")) p.search = SearchConfig::from_json(config.at("search"));
      EvalReport r = evaluate(p, load_set(ev_set), {ev_dcap, seed, threads});
      r.checkpoint = ev_ckpt.empty() ? "" : fs::path(ev_ckpt).stem().string();
      r.set = fs::path(ev_set).filename().string();
      const std::string text = r.to_json(verbose).dump(2) + "\n";
      if (ev_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(ev_out, std::ios::binary) << text;
      }
      std::cerr << "wall time " << r.wall_seconds << " s\n";
      return 0;
    }

    if (*sw) {
      SweepOptions opts;
      opts.eval = {sw_dcap, seed, threads};
      if (!sw_policy.empty()) opts.policy = policy_from_string(sw_policy);
      if (config.contains("search")) opts.search = SearchConfig::from_json(config.at("search"));
      const auto train = load_set(sw_train.empty() ? (fs::path(sw_run) / "train").string() : sw_train);
      std::cout << sweep_checkpoints(sw_run, train, load_set(sw_test), opts);
      return 0;
    }
  } catch (const SoundnessError& e) {
    std::cerr << "soundness violation: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
