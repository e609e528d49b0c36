#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "satgame/agents.hpp"
#include "satgame/cnf.hpp"

namespace satgame {

/// A solved episode disagreed with the instance's label.
struct SoundnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstanceResult {
  std::string id;
  Label label = Label::unknown;
  Verdict verdict = Verdict::truncated;
  int decisions = 0;
};

/// Mean, median and max are over solved episodes only; truncations are
/// counted separately.
struct EvalReport {
  std::string policy;
  std::string checkpoint;  // empty for baselines
  std::string set;
  int instances = 0;
  int solved = 0;
  int truncated = 0;
  std::optional<double> mean_decisions;
  std::optional<double> median_decisions;
  std::optional<int> max_decisions;
  double solve_rate = 0.0;
  double wall_seconds = 0.0;  // never part of the deterministic output
  std::vector<InstanceResult> rows;  // sorted by instance id

  /// Deterministic JSON; per-instance rows only when `verbose`.
  nlohmann::json to_json(bool verbose) const;
};

struct EvalOptions {
  int d_cap = 200;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// One episode per instance. Episode seeds are derive_seed(seed, id), so
/// results do not depend on set order or thread count. Throws
/// SoundnessError on a verdict that contradicts a label and ShapeError when
/// the policy's network does not fit the instances.
EvalReport evaluate(const Policy& policy, const std::vector<Formula>& instances, const EvalOptions& opts);

inline constexpr const char* kSweepHeader = "checkpoint,set,policy,mean_decisions,solve_rate,median,max";

struct SweepOptions {
  EvalOptions eval{};
  /// Policy used for checkpoints; defaults to greedy-q for DeepQ runs and
  /// network-pi for AlphaZero runs.
  std::optional<PolicyKind> policy;
  SearchConfig search{};
};

/// Evaluates every checkpoint of a run on both sets plus the vsids and
/// random baselines, writes <run>/metrics.csv and returns its contents.
std::string sweep_checkpoints(const std::filesystem::path& run_dir, const std::vector<Formula>& train,
                              const std::vector<Formula>& test, const SweepOptions& opts);

/// One CSV row in the sweep format.
std::string csv_row(const EvalReport& r);

}  // namespace satgame
