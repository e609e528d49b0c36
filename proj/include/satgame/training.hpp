#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "satgame/agents.hpp"
#include "satgame/cnf.hpp"

namespace satgame {

struct DeepQConfig {
  Architecture arch = [] {
    Architecture a;
    a.head = HeadKind::q;
    return a;
  }();
  std::uint64_t seed = 1;
  int d_cap = 200;
  std::int64_t total_env_steps = 200000;
  std::int64_t checkpoint_every = 10000;  // env steps; checkpoints land on episode ends
  std::int64_t epsilon_horizon = 100000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double gamma = 0.99;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int buffer_capacity = 50000;
  int warmup = 1000;
  int learn_every = 4;
  int target_sync = 500;

  void validate() const;
  nlohmann::json to_json() const;
  static DeepQConfig from_json(const nlohmann::json& j);
};

struct ZeroConfig {
  Architecture arch{};
  SearchConfig search{};
  std::uint64_t seed = 1;
  int d_cap = 200;
  int iterations = 50;
  int episodes_per_iteration = 32;
  int window = 20000;
  int batch_size = 64;
  int train_steps = 100;  // minibatch updates per iteration
  double learning_rate = 1e-3;
  double l2 = 1e-4;
  // Train on a random relabeling (rows, variables, polarities) of each sample.
  bool augment = false;

  void validate() const;
  nlohmann::json to_json() const;
  static ZeroConfig from_json(const nlohmann::json& j);
};

struct SelfPlaySample {
  Observation s;
  std::vector<double> target_pi;
  double target_z = 0.0;
  std::string instance_id;
  int move = 0;
};

struct SelfPlayEpisode {
  std::vector<SelfPlaySample> samples;
  EpisodeTrace trace;
};

/// Plays one self-play episode: each move searches from the current state,
/// records the root visit distribution, and plays a sampled (first
/// `search.temperature_moves` moves) or most-visited action. All samples get
/// the episode's final z.
SelfPlayEpisode self_play_episode(const Formula& f, const Network& net, const SearchConfig& search, int d_cap,
                                  std::uint64_t seed);

/// Where a run keeps its files:
///   config.json, train/ (instance set), checkpoints/model-<k>.ckpt and
///   model-<k>.state, training.csv, episodes/.
struct RunDirectory {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path train_set() const { return root / "train"; }
  std::filesystem::path checkpoint(int k) const;
  std::filesystem::path state(int k) const;
  std::filesystem::path training_log() const { return root / "training.csv"; }
  std::filesystem::path episodes() const { return root / "episodes"; }
  /// Checkpoint indices present, ascending.
  std::vector<int> checkpoints() const;
};

struct TrainOptions {
  int threads = 1;
  std::optional<int> stop_after;  // stop once this checkpoint is written
  bool write_episodes = false;    // JSONL traces under episodes/
};

/// Creates a fresh run in `run_dir` (must not already contain one) and
/// trains. Returns the checkpoint paths in order, model-0 first.
std::vector<std::filesystem::path> deepq_train(const DeepQConfig& cfg, const std::vector<Formula>& train,
                                               const std::filesystem::path& run_dir,
                                               const TrainOptions& opts = {});
std::vector<std::filesystem::path> alphazero_train(const ZeroConfig& cfg, const std::vector<Formula>& train,
                                                   const std::filesystem::path& run_dir,
                                                   const TrainOptions& opts = {});

/// Continues a run from its latest checkpoint (or `from` when given).
std::vector<std::filesystem::path> resume_training(const std::filesystem::path& run_dir,
                                                   const TrainOptions& opts = {},
                                                   std::optional<int> from = std::nullopt);

/// Throws std::invalid_argument if any instance id appears in both sets.
void check_disjoint(const std::vector<Formula>& a, const std::vector<Formula>& b);

}  // namespace satgame
