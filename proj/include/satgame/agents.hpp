#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "satgame/game.hpp"
#include "satgame/mcts.hpp"
#include "satgame/network.hpp"

namespace satgame {

struct Transition {
  Observation s;
  int action = 0;
  double reward = 0.0;
  Observation s_next;  // s_next.mask() is the legal set after the move
  bool terminal = false;
};

/// Fixed-capacity ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  /// `batch` indices drawn uniformly with replacement.
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;

  void write(std::ostream& os) const;
  static ReplayBuffer read(std::istream& is);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // slot overwritten by the next push once full
  std::vector<Transition> items_;
};

void write_observation(std::ostream& os, const Observation& o);
Observation read_observation(std::istream& is);

/// Linear from `start` at step 0 to `end` at `horizon`, constant after.
double epsilon_schedule(std::int64_t step, std::int64_t horizon, double start = 1.0, double end = 0.05);

/// r when terminal, else r + gamma * max over legal a' of q_next[a'].
double deepq_target(double reward, bool terminal, double gamma, std::span<const double> q_next,
                    const ActionMask& legal_next);

/// Index of the largest value among legal entries; ties go to the lowest.
int argmax_legal(std::span<const double> values, const ActionMask& mask);

enum class PolicyKind { random, vsids, greedy_q, network_pi, mcts };
std::string_view to_string(PolicyKind k);
PolicyKind policy_from_string(std::string_view s);

struct Policy {
  PolicyKind kind = PolicyKind::vsids;
  const Network* net = nullptr;  // greedy_q, network_pi, mcts
  SearchConfig search{};         // mcts only; run without root noise

  bool needs_network() const {
    return kind == PolicyKind::greedy_q || kind == PolicyKind::network_pi || kind == PolicyKind::mcts;
  }
};

struct Episode {
  EpisodeTrace trace;
  GameOutcome outcome;
};

/// Plays `env` to the end with `policy`. Deterministic in (policy, seed).
/// Throws IllegalAction if the policy ever proposes an illegal move.
Episode play_episode(SatGame env, const Policy& policy, std::uint64_t seed);

}  // namespace satgame
