#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "satgame/game.hpp"
#include "satgame/network.hpp"
#include "satgame/util.hpp"

namespace satgame {

struct SearchConfig {
  int num_simulations = 100;
  double c_puct = 1.5;
  double dirichlet_alpha = 0.3;
  double dirichlet_epsilon = 0.25;
  int temperature_moves = 8;  // tau = 1 for this many moves, then argmax
  bool reuse_tree = true;

  void validate() const;
  nlohmann::json to_json() const;
  static SearchConfig from_json(const nlohmann::json& j);
};

/// Priors and value for a non-terminal position.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual PolicyValue evaluate(const Observation& obs) const = 0;
};

class NetworkEvaluator : public Evaluator {
 public:
  explicit NetworkEvaluator(const Network& net) : net_(net) {}
  PolicyValue evaluate(const Observation& obs) const override { return net_.forward_policy_value(obs); }

 private:
  const Network& net_;
};

/// Uniform priors over legal actions and value 0: plain PUCT tree search.
class UniformEvaluator : public Evaluator {
 public:
  PolicyValue evaluate(const Observation& obs) const override;
};

/// Statistics of one legal action out of a node.
struct Edge {
  int action = 0;
  double prior = 0.0;
  double raw_prior = 0.0;  // prior before root noise
  int n = 0;
  double w = 0.0;
  int child = -1;

  double q() const { return n > 0 ? w / n : 0.0; }
};

struct SearchNode {
  std::vector<Edge> edges;  // legal actions, ascending index
  bool expanded = false;
  bool terminal = false;
  double terminal_value = 0.0;
  std::uint64_t observation_digest = 0;

  int visits() const;
};

/// argmax over edges of Q + c * P * sqrt(sum N) / (1 + N), Q = 0 when
/// unvisited, ties to the lowest index. Returns the edge position.
int puct_select(std::span<const Edge> edges, double c_puct);

/// N += 1 and W += value along the path (single player: no sign flip).
void backup(std::span<Edge* const> path, double value);

/// pi(a) proportional to N(a)^(1/tau); tau = 0 gives the argmax one-hot.
std::vector<double> policy_from_visits(std::span<const int> visits, double tau);

struct SearchResult {
  std::vector<int> visits;   // length 2V, zero for illegal actions
  std::vector<double> pi;    // visit distribution at temperature 1
  double root_value = 0.0;   // mean value over root visits
};

/// A search tree that can be kept between the moves of one episode.
class Mcts {
 public:
  Mcts(const Evaluator& eval, SearchConfig cfg, std::uint64_t seed);

  /// Runs cfg.num_simulations simulations from `root`. The root game is
  /// only read; every lookahead goes through SatGame::simulate. Throws
  /// std::logic_error on a terminal root.
  SearchResult search(const SatGame& root, bool add_noise);

  /// Re-roots the tree at the child reached by `a` (or clears it when tree
  /// reuse is off).
  void advance(Action a);
  void reset();

  const SearchNode& root() const { return nodes_.at(0); }
  const SearchNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::size_t num_nodes() const { return nodes_.size(); }
  /// Per-edge statistics of the current root as JSON.
  nlohmann::json root_trace() const;

 private:
  double expand(SearchNode& node, const Observation& obs);
  void add_root_noise();

  const Evaluator& eval_;
  SearchConfig cfg_;
  Rng rng_;
  std::vector<SearchNode> nodes_;
};

/// One-shot search on a fresh tree.
SearchResult run_search(const SatGame& root, const Evaluator& eval, const SearchConfig& cfg,
                        std::uint64_t seed, bool add_noise = true);

}  // namespace satgame
