#include "satgame/agents.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "satgame/util.hpp"

namespace satgame {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.below(items_.size());
  return idx;
}

void write_observation(std::ostream& os, const Observation& o) {
  binio::put<std::int32_t>(os, o.rows());
  binio::put<std::int32_t>(os, o.vars());
  for (auto w : o.packed_bits()) binio::put<std::uint64_t>(os, w);
  os.write(reinterpret_cast<const char*>(o.mask().data()), static_cast<std::streamsize>(o.mask().size()));
}

Observation read_observation(std::istream& is) {
  const auto rows = binio::get<std::int32_t>(is);
  const auto vars = binio::get<std::int32_t>(is);
  if (rows < 0 || vars < 0 || rows > (1 << 16) || vars > (1 << 16)) {
    throw binio::FormatError("observation shape out of range");
  }
  std::vector<std::uint64_t> bits((static_cast<std::size_t>(rows) * static_cast<std::size_t>(vars) * 2 + 63) / 64);
  for (auto& w : bits) w = binio::get<std::uint64_t>(is);
  ActionMask mask(static_cast<std::size_t>(2 * vars));
  is.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  if (!is) throw binio::FormatError("unexpected end of file");
  return Observation::from_packed(rows, vars, std::move(bits), std::move(mask));
}

void ReplayBuffer::write(std::ostream& os) const {
  binio::put<std::uint64_t>(os, capacity_);
  binio::put<std::uint64_t>(os, next_);
  binio::put<std::uint64_t>(os, items_.size());
  for (const auto& t : items_) {
    write_observation(os, t.s);
    binio::put<std::int32_t>(os, t.action);
    binio::put<double>(os, t.reward);
    write_observation(os, t.s_next);
    binio::put<std::uint8_t>(os, t.terminal ? 1 : 0);
  }
}

ReplayBuffer ReplayBuffer::read(std::istream& is) {
  ReplayBuffer b(binio::get<std::uint64_t>(is));
  b.next_ = binio::get<std::uint64_t>(is);
  const auto n = binio::get<std::uint64_t>(is);
  if (n > b.capacity_ || b.next_ >= b.capacity_) throw binio::FormatError("replay buffer header out of range");
  b.items_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.s = read_observation(is);
    t.action = binio::get<std::int32_t>(is);
    t.reward = binio::get<double>(is);
    t.s_next = read_observation(is);
    t.terminal = binio::get<std::uint8_t>(is) != 0;
    b.items_.push_back(std::move(t));
  }
  return b;
}

double epsilon_schedule(std::int64_t step, std::int64_t horizon, double start, double end) {
  if (horizon <= 0 || step >= horizon) return end;
  if (step <= 0) return start;
  return start + (end - start) * static_cast<double>(step) / static_cast<double>(horizon);
}

int argmax_legal(std::span<const double> values, const ActionMask& mask) {
  int best = -1;
  for (std::size_t a = 0; a < values.size() && a < mask.size(); ++a) {
    if (mask[a] && (best < 0 || values[a] > values[static_cast<std::size_t>(best)])) best = static_cast<int>(a);
  }
  if (best < 0) throw std::logic_error("argmax over an empty legal set");
  return best;
}

double deepq_target(double reward, bool terminal, double gamma, std::span<const double> q_next,
                    const ActionMask& legal_next) {
  if (terminal) return reward;
  return reward + gamma * q_next[static_cast<std::size_t>(argmax_legal(q_next, legal_next))];
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::random: return "random";
    case PolicyKind::vsids: return "vsids";
    case PolicyKind::greedy_q: return "greedy-q";
    case PolicyKind::network_pi: return "network-pi";
    case PolicyKind::mcts: break;
  }
  return "mcts";
}

PolicyKind policy_from_string(std::string_view s) {
  for (auto k : {PolicyKind::random, PolicyKind::vsids, PolicyKind::greedy_q, PolicyKind::network_pi,
                 PolicyKind::mcts}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(s) +
                              "' (expected random, vsids, greedy-q, network-pi or mcts)");
}

Episode play_episode(SatGame env, const Policy& policy, std::uint64_t seed) {
  if (policy.needs_network() && !policy.net) {
    throw std::invalid_argument(std::string("policy ") + std::string(to_string(policy.kind)) + " needs a network");
  }
  Rng rng(seed);
  Episode ep;
  ep.trace.instance_id = env.formula().id();
  std::uint64_t move = 0;
  while (!env.terminal()) {
    const Observation obs = env.observe();
    Action a;
    switch (policy.kind) {
      case PolicyKind::random: {
        std::vector<int> legal;
        for (std::size_t i = 0; i < obs.mask().size(); ++i) {
          if (obs.mask()[i]) legal.push_back(static_cast<int>(i));
        }
        a = Action::decode(legal[rng.below(legal.size())]);
        break;
      }
      case PolicyKind::vsids: a = env.vsids_action(); break;
      case PolicyKind::greedy_q: a = Action::decode(argmax_legal(policy.net->forward_q(obs), obs.mask())); break;
      case PolicyKind::network_pi:
        a = Action::decode(argmax_legal(policy.net->forward_policy_value(obs).pi, obs.mask()));
        break;
      case PolicyKind::mcts: {
        const NetworkEvaluator eval(*policy.net);
        const auto r = run_search(env, eval, policy.search, derive_seed(seed, move), false);
        a = Action::decode(argmax_legal(policy_from_visits(r.visits, 0.0), obs.mask()));
        break;
      }
    }
    const auto step = env.step(a);
    ep.trace.observation_digests.push_back(obs.digest());
    ep.trace.actions.push_back(a.index());
    ep.trace.rewards.push_back(step.reward);
    ++move;
  }
  ep.outcome = env.outcome();
  ep.trace.outcome = ep.outcome;
  return ep;
}

}  // namespace satgame
