#include "satgame/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace satgame {

void SearchConfig::validate() const {
  if (num_simulations < 1) throw std::invalid_argument("search: num_simulations must be >= 1");
  if (!(c_puct > 0.0)) throw std::invalid_argument("search: c_puct must be positive");
  if (!(dirichlet_epsilon >= 0.0 && dirichlet_epsilon <= 1.0)) {
    throw std::invalid_argument("search: dirichlet_epsilon must lie in [0, 1]");
  }
  if (!(dirichlet_alpha > 0.0)) throw std::invalid_argument("search: dirichlet_alpha must be positive");
  if (temperature_moves < 0) throw std::invalid_argument("search: temperature_moves must be >= 0");
}

nlohmann::json SearchConfig::to_json() const {
  return {{"num_simulations", num_simulations},     {"c_puct", c_puct},
          {"dirichlet_alpha", dirichlet_alpha},     {"dirichlet_epsilon", dirichlet_epsilon},
          {"temperature_moves", temperature_moves}, {"reuse_tree", reuse_tree}};
}

SearchConfig SearchConfig::from_json(const nlohmann::json& j) {
  SearchConfig c;
  c.num_simulations = j.value("num_simulations", c.num_simulations);
  c.c_puct = j.value("c_puct", c.c_puct);
  c.dirichlet_alpha = j.value("dirichlet_alpha", c.dirichlet_alpha);
  c.dirichlet_epsilon = j.value("dirichlet_epsilon", c.dirichlet_epsilon);
  c.temperature_moves = j.value("temperature_moves", c.temperature_moves);
  c.reuse_tree = j.value("reuse_tree", c.reuse_tree);
  c.validate();
  return c;
}

PolicyValue UniformEvaluator::evaluate(const Observation& obs) const {
  PolicyValue pv;
  pv.pi.assign(obs.mask().size(), 0.0);
  const int legal = obs.num_legal();
  for (std::size_t a = 0; a < pv.pi.size(); ++a) {
    if (obs.mask()[a]) pv.pi[a] = 1.0 / legal;
  }
  return pv;
}

int SearchNode::visits() const {
  int n = 0;
  for (const auto& e : edges) n += e.n;
  return n;
}

int puct_select(std::span<const Edge> edges, double c_puct) {
  if (edges.empty()) throw std::logic_error("puct_select: node has no legal actions");
  int total = 0;
  for (const auto& e : edges) total += e.n;
  const double sqrt_total = std::sqrt(static_cast<double>(total));
  int best = 0;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const double score = e.q() + c_puct * e.prior * sqrt_total / (1.0 + e.n);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void backup(std::span<Edge* const> path, double value) {
  for (Edge* e : path) {
    e->n += 1;
    e->w += value;
  }
}

std::vector<double> policy_from_visits(std::span<const int> visits, double tau) {
  if (tau < 0.0) throw std::invalid_argument("policy_from_visits: negative temperature");
  std::vector<double> pi(visits.size(), 0.0);
  const auto top = std::max_element(visits.begin(), visits.end());
  if (top == visits.end() || *top <= 0) throw std::invalid_argument("policy_from_visits: no visits");
  if (tau == 0.0) {
    pi[static_cast<std::size_t>(top - visits.begin())] = 1.0;
    return pi;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    // Scale by the maximum first so large counts and small tau stay finite.
    pi[i] = visits[i] > 0 ? std::pow(static_cast<double>(visits[i]) / *top, 1.0 / tau) : 0.0;
    total += pi[i];
  }
  for (auto& p : pi) p /= total;
  return pi;
}

// ---------------------------------------------------------------------------

Mcts::Mcts(const Evaluator& eval, SearchConfig cfg, std::uint64_t seed)
    : eval_(eval), cfg_(cfg), rng_(seed) {
  cfg_.validate();
}

void Mcts::reset() { nodes_.clear(); }

double Mcts::expand(SearchNode& node, const Observation& obs) {
  const PolicyValue pv = eval_.evaluate(obs);
  node.edges.clear();
  for (int a = 0; a < obs.num_actions(); ++a) {
    if (!obs.mask()[static_cast<std::size_t>(a)]) continue;
    Edge e;
    e.action = a;
    e.prior = e.raw_prior = pv.pi[static_cast<std::size_t>(a)];
    node.edges.push_back(e);
  }
  node.expanded = true;
  node.observation_digest = obs.digest();
  return pv.v;
}

void Mcts::add_root_noise() {
  auto& edges = nodes_[0].edges;
  if (cfg_.dirichlet_epsilon == 0.0 || edges.empty()) return;
  std::vector<double> noise(edges.size());
  double total = 0.0;
  for (auto& x : noise) total += (x = rng_.gamma(cfg_.dirichlet_alpha));
  const double eps = cfg_.dirichlet_epsilon;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double d = total > 0.0 ? noise[i] / total : 1.0 / static_cast<double>(edges.size());
    edges[i].prior = (1.0 - eps) * edges[i].raw_prior + eps * d;
  }
}

SearchResult Mcts::search(const SatGame& root, bool add_noise) {
  if (root.terminal()) throw std::logic_error("search from a terminal position");
  const Observation root_obs = root.observe();
  if (!nodes_.empty() && (!nodes_[0].expanded || nodes_[0].observation_digest != root_obs.digest())) {
    nodes_.clear();
  }
  if (nodes_.empty()) {
    nodes_.emplace_back();
    expand(nodes_[0], root_obs);
  } else {
    for (auto& e : nodes_[0].edges) e.prior = e.raw_prior;
  }
  if (add_noise) add_root_noise();

  std::vector<Action> line;
  std::vector<std::pair<int, int>> path;  // (node, edge)
  std::vector<Edge*> edges;
  for (int sim = 0; sim < cfg_.num_simulations; ++sim) {
    line.clear();
    path.clear();
    int node = 0;
    double value = 0.0;
    for (;;) {
      const int e = puct_select(nodes_[static_cast<std::size_t>(node)].edges, cfg_.c_puct);
      path.emplace_back(node, e);
      Edge& edge = nodes_[static_cast<std::size_t>(node)].edges[static_cast<std::size_t>(e)];
      line.push_back(Action::decode(edge.action));
      if (edge.child < 0) {
        const int child = static_cast<int>(nodes_.size());
        edge.child = child;
        nodes_.emplace_back();
        const SimulateResult r = root.simulate(line);
        SearchNode& leaf = nodes_.back();
        if (r.outcome) {
          leaf.terminal = true;
          leaf.terminal_value = r.outcome->z;
          leaf.observation_digest = r.observation.digest();
          value = leaf.terminal_value;
        } else {
          value = expand(leaf, r.observation);
        }
        break;
      }
      const SearchNode& next = nodes_[static_cast<std::size_t>(edge.child)];
      if (next.terminal) {
        value = next.terminal_value;
        break;
      }
      node = edge.child;
    }
    edges.clear();
    for (auto [n, e] : path) edges.push_back(&nodes_[static_cast<std::size_t>(n)].edges[static_cast<std::size_t>(e)]);
    backup(edges, value);
  }

  SearchResult r;
  r.visits.assign(static_cast<std::size_t>(root.num_actions()), 0);
  double w = 0.0;
  int n = 0;
  for (const auto& e : nodes_[0].edges) {
    r.visits[static_cast<std::size_t>(e.action)] = e.n;
    w += e.w;
    n += e.n;
  }
  r.pi = policy_from_visits(r.visits, 1.0);
  r.root_value = n > 0 ? w / n : 0.0;
  return r;
}

void Mcts::advance(Action a) {
  if (nodes_.empty() || !cfg_.reuse_tree) {
    nodes_.clear();
    return;
  }
  int child = -1;
  for (const auto& e : nodes_[0].edges) {
    if (e.action == a.index()) child = e.child;
  }
  if (child < 0) {
    nodes_.clear();
    return;
  }
  // Copy the subtree below `child` into a fresh arena, root first.
  std::vector<SearchNode> kept;
  std::vector<int> order{child};
  std::vector<int> remap(nodes_.size(), -1);
  remap[static_cast<std::size_t>(child)] = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto& e : nodes_[static_cast<std::size_t>(order[i])].edges) {
      if (e.child >= 0) {
        remap[static_cast<std::size_t>(e.child)] = static_cast<int>(order.size());
        order.push_back(e.child);
      }
    }
  }
  kept.reserve(order.size());
  for (int old : order) {
    kept.push_back(std::move(nodes_[static_cast<std::size_t>(old)]));
    for (auto& e : kept.back().edges) {
      if (e.child >= 0) e.child = remap[static_cast<std::size_t>(e.child)];
    }
  }
  nodes_ = std::move(kept);
  if (nodes_[0].terminal) nodes_.clear();
}

nlohmann::json Mcts::root_trace() const {
  nlohmann::json edges = nlohmann::json::array();
  if (!nodes_.empty()) {
    for (const auto& e : nodes_[0].edges) {
      edges.push_back({{"action", e.action}, {"visits", e.n}, {"prior", e.prior},
                       {"raw_prior", e.raw_prior}, {"q", e.q()}});
    }
  }
  return {{"nodes", nodes_.size()}, {"edges", edges}};
}

SearchResult run_search(const SatGame& root, const Evaluator& eval, const SearchConfig& cfg,
                        std::uint64_t seed, bool add_noise) {
  Mcts m(eval, cfg, seed);
  return m.search(root, add_noise);
}

}  // namespace satgame
