#include "satgame/training.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "satgame/parallel.hpp"
#include "satgame/util.hpp"

namespace satgame {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configs

void DeepQConfig::validate() const {
  arch.validate();
  if (arch.head != HeadKind::q) throw std::invalid_argument("deepq: architecture needs a q head");
  if (d_cap < 1) throw std::invalid_argument("deepq: d_cap must be positive");
  if (total_env_steps < 1 || checkpoint_every < 1) {
    throw std::invalid_argument("deepq: total_env_steps and checkpoint_every must be positive");
  }
  if (batch_size < 1 || learn_every < 1 || target_sync < 1) {
    throw std::invalid_argument("deepq: batch_size, learn_every and target_sync must be positive");
  }
  if (warmup < batch_size) throw std::invalid_argument("deepq: warmup must be at least one batch");
  if (buffer_capacity < warmup) throw std::invalid_argument("deepq: buffer_capacity must hold the warm-up");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("deepq: gamma must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("deepq: learning_rate must be positive");
}

nlohmann::json DeepQConfig::to_json() const {
  return {{"architecture", arch.to_json()},
          {"seed", seed},
          {"d_cap", d_cap},
          {"total_env_steps", total_env_steps},
          {"checkpoint_every", checkpoint_every},
          {"epsilon_horizon", epsilon_horizon},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"gamma", gamma},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"buffer_capacity", buffer_capacity},
          {"warmup", warmup},
          {"learn_every", learn_every},
          {"target_sync", target_sync}};
}

DeepQConfig DeepQConfig::from_json(const nlohmann::json& j) {
  DeepQConfig c;
  if (j.contains("architecture")) {
    auto a = j.at("architecture");
    if (!a.contains("head")) a["head"] = "q";
    c.arch = Architecture::from_json(a);
  }
  c.seed = j.value("seed", c.seed);
  c.d_cap = j.value("d_cap", c.d_cap);
  c.total_env_steps = j.value("total_env_steps", c.total_env_steps);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.epsilon_horizon = j.value("epsilon_horizon", c.epsilon_horizon);
  c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
  c.epsilon_end = j.value("epsilon_end", c.epsilon_end);
  c.gamma = j.value("gamma", c.gamma);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.warmup = j.value("warmup", c.warmup);
  c.learn_every = j.value("learn_every", c.learn_every);
  c.target_sync = j.value("target_sync", c.target_sync);
  c.validate();
  return c;
}

void ZeroConfig::validate() const {
  arch.validate();
  search.validate();
  if (arch.head != HeadKind::policy_value) {
    throw std::invalid_argument("alphazero: architecture needs a policy_value head");
  }
  if (d_cap < 1) throw std::invalid_argument("alphazero: d_cap must be positive");
  if (iterations < 0 || episodes_per_iteration < 1 || window < 1 || batch_size < 1 || train_steps < 0) {
    throw std::invalid_argument("alphazero: iteration, episode, window and batch sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("alphazero: learning_rate must be positive");
  if (l2 < 0.0) throw std::invalid_argument("alphazero: l2 must be non-negative");
}

nlohmann::json ZeroConfig::to_json() const {
  return {{"architecture", arch.to_json()},
          {"search", search.to_json()},
          {"seed", seed},
          {"d_cap", d_cap},
          {"iterations", iterations},
          {"episodes_per_iteration", episodes_per_iteration},
          {"window", window},
          {"batch_size", batch_size},
          {"train_steps", train_steps},
          {"learning_rate", learning_rate},
          {"l2", l2},
          {"augment", augment}};
}

ZeroConfig ZeroConfig::from_json(const nlohmann::json& j) {
  ZeroConfig c;
  if (j.contains("architecture")) c.arch = Architecture::from_json(j.at("architecture"));
  if (j.contains("search")) c.search = SearchConfig::from_json(j.at("search"));
  c.seed = j.value("seed", c.seed);
  c.d_cap = j.value("d_cap", c.d_cap);
  c.iterations = j.value("iterations", c.iterations);
  c.episodes_per_iteration = j.value("episodes_per_iteration", c.episodes_per_iteration);
  c.window = j.value("window", c.window);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.train_steps = j.value("train_steps", c.train_steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.l2 = j.value("l2", c.l2);
  c.augment = j.value("augment", c.augment);
  c.validate();
  return c;
}

void check_disjoint(const std::vector<Formula>& a, const std::vector<Formula>& b) {
  std::set<std::string> ids;
  for (const auto& f : a) ids.insert(f.id());
  for (const auto& f : b) {
    if (ids.count(f.id())) throw std::invalid_argument("instance " + f.id() + " is in both train and test sets");
  }
}

// ---------------------------------------------------------------------------
// Run directory

fs::path RunDirectory::checkpoint(int k) const {
  return root / "checkpoints" / ("model-" + std::to_string(k) + ".ckpt");
}

fs::path RunDirectory::state(int k) const {
  return root / "checkpoints" / ("model-" + std::to_string(k) + ".state");
}

std::vector<int> RunDirectory::checkpoints() const {
  std::vector<int> ks;
  const fs::path dir = root / "checkpoints";
  if (!fs::is_directory(dir)) return ks;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("model-", 0) != 0 || entry.path().extension() != ".ckpt") continue;
    const std::string num = name.substr(6, name.size() - 6 - 5);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) continue;
    ks.push_back(std::stoi(num));
  }
  std::sort(ks.begin(), ks.end());
  return ks;
}

namespace {

constexpr char kStateMagic[8] = {'S', 'A', 'T', 'G', 'S', 'T', 'A', 'T'};
constexpr std::uint32_t kStateVersion = 1;

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& p, const std::string& bytes) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// State files: magic, version, JSON counters, then an algorithm-specific
// binary payload, then an FNV-1a checksum.
std::string pack_state(const nlohmann::json& counters, const std::string& payload) {
  std::ostringstream os(std::ios::binary);
  os.write(kStateMagic, sizeof kStateMagic);
  binio::put<std::uint32_t>(os, kStateVersion);
  binio::put_string(os, counters.dump());
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  std::string bytes = std::move(os).str();
  Digest d;
  d.bytes(bytes.data(), bytes.size());
  std::ostringstream tail(std::ios::binary);
  binio::put<std::uint64_t>(tail, d.get());
  return bytes + tail.str();
}

// Returns the counters; `payload` is left positioned after them.
nlohmann::json unpack_state(const fs::path& p, std::istringstream& payload) {
  const std::string bytes = read_file(p);
  if (bytes.size() < sizeof kStateMagic + 4 + 8 ||
      bytes.compare(0, sizeof kStateMagic, kStateMagic, sizeof kStateMagic) != 0) {
    throw std::runtime_error("not a trainer state file: " + p.string());
  }
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof kStateMagic, 4);
  if (version != kStateVersion) throw std::runtime_error("unsupported trainer state version in " + p.string());
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  Digest d;
  d.bytes(bytes.data(), bytes.size() - 8);
  if (d.get() != stored) throw std::runtime_error("trainer state is truncated or corrupted: " + p.string());
  payload.str(bytes.substr(sizeof kStateMagic + 4, bytes.size() - 8 - sizeof kStateMagic - 4));
  return nlohmann::json::parse(binio::get_string(payload, 1 << 24));
}

void write_run_config(const RunDirectory& run, const std::string& algorithm, const nlohmann::json& cfg,
                      const std::vector<Formula>& train) {
  if (fs::exists(run.config())) {
    throw std::invalid_argument(run.root.string() + " already holds a run; resume it instead");
  }
  if (train.empty()) throw std::invalid_argument("empty training set");
  fs::create_directories(run.root / "checkpoints");
  write_instance_set(run.train_set(), train, {});
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& f : train) ids.push_back(f.id());
  const nlohmann::json j = {{"format", "satgame-run"},
                            {"version", 1},
                            {"algorithm", algorithm},
                            {"config", cfg},
                            {"train_set", "train"},
                            {"train_instances", ids}};
  write_file(run.config(), j.dump(2) + "\n");
}

// Keeps the header and rows for checkpoints <= k; rows are keyed by their
// first column.
void truncate_log(const fs::path& log, int k) {
  if (!fs::exists(log)) return;
  std::istringstream in(read_file(log));
  std::string out, line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoi(line.substr(0, line.find(','))) <= k) out += line + "\n";
    header = false;
  }
  write_file(log, out);
}

void append_log(const fs::path& log, const std::string& header, const std::string& row) {
  const bool fresh = !fs::exists(log);
  std::ofstream f(log, std::ios::binary | std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + log.string());
  if (fresh) f << header << "\n";
  f << row << "\n";
}

void write_episodes(const RunDirectory& run, int k, const std::vector<EpisodeTrace>& traces) {
  fs::create_directories(run.episodes());
  std::string out;
  for (const auto& t : traces) out += t.to_json_line() + "\n";
  write_file(run.episodes() / ("model-" + std::to_string(k) + ".jsonl"), out);
}

// ---------------------------------------------------------------------------
// DeepQ

class DeepQRun {
 public:
  DeepQRun(DeepQConfig cfg, std::vector<Formula> train, RunDirectory run)
      : cfg_(std::move(cfg)),
        train_(std::move(train)),
        run_(std::move(run)),
        net_(cfg_.arch, cfg_.seed),
        target_(net_),
        buffer_(static_cast<std::size_t>(cfg_.buffer_capacity)) {}

  void resume(int k) {
    net_ = Network::load(run_.checkpoint(k));
    std::istringstream is(std::ios::binary);
    const auto c = unpack_state(run_.state(k), is);
    checkpoint_ = c.at("checkpoint").get<int>();
    env_steps_ = c.at("env_steps").get<std::int64_t>();
    learn_steps_ = c.at("learn_steps").get<std::int64_t>();
    episodes_ = c.at("episodes").get<std::int64_t>();
    target_ = Network::deserialize(binio::get_string(is), run_.state(k).string());
    buffer_ = ReplayBuffer::read(is);
    truncate_log(run_.training_log(), k);
  }

  std::vector<fs::path> run(const TrainOptions& opts) {
    std::vector<fs::path> out;
    if (checkpoint_ < 0) {
      emit(0, opts);
      out.push_back(run_.checkpoint(0));
      if (opts.stop_after && *opts.stop_after <= 0) return out;
    }
    const std::uint64_t act_seed = derive_seed(cfg_.seed, std::string_view("deepq-act"));
    const std::uint64_t learn_seed = derive_seed(cfg_.seed, std::string_view("deepq-learn"));
    while (env_steps_ < cfg_.total_env_steps) {
      const Formula& f = train_[static_cast<std::size_t>(episodes_) % train_.size()];
      Rng rng(derive_seed(act_seed, static_cast<std::uint64_t>(episodes_)));
      SatGame env(f, {.d_cap = cfg_.d_cap});
      EpisodeTrace trace;
      trace.instance_id = f.id();
      Observation obs = env.observe();
      while (!env.terminal()) {
        const double eps = epsilon_schedule(env_steps_, cfg_.epsilon_horizon, cfg_.epsilon_start, cfg_.epsilon_end);
        int a;
        if (rng.uniform() < eps) {
          std::vector<int> legal;
          for (std::size_t i = 0; i < obs.mask().size(); ++i) {
            if (obs.mask()[i]) legal.push_back(static_cast<int>(i));
          }
          a = legal[rng.below(legal.size())];
        } else {
          a = argmax_legal(net_.forward_q(obs), obs.mask());
        }
        auto step = env.step(Action::decode(a));
        trace.observation_digests.push_back(obs.digest());
        trace.actions.push_back(a);
        trace.rewards.push_back(step.reward);
        buffer_.push({obs, a, step.reward, step.observation, step.terminal});
        obs = std::move(step.observation);
        ++env_steps_;
        if (static_cast<int>(buffer_.size()) >= cfg_.warmup && env_steps_ % cfg_.learn_every == 0) {
          learn(learn_seed);
        }
      }
      ++episodes_;
      idle_episodes_ = env.decisions() == 0 ? idle_episodes_ + 1 : 0;
      if (idle_episodes_ > static_cast<std::int64_t>(train_.size())) {
        throw std::invalid_argument("deepq: every training instance is decided without a branching decision");
      }
      trace.outcome = env.outcome();
      decisions_sum_ += trace.outcome.decisions;
      ++episodes_since_;
      if (opts.write_episodes) traces_.push_back(std::move(trace));
      if (env_steps_ >= static_cast<std::int64_t>(checkpoint_ + 1) * cfg_.checkpoint_every ||
          env_steps_ >= cfg_.total_env_steps) {
        emit(checkpoint_ + 1, opts);
        out.push_back(run_.checkpoint(checkpoint_));
        if (opts.stop_after && checkpoint_ >= *opts.stop_after) break;
      }
    }
    return out;
  }

 private:
  void learn(std::uint64_t learn_seed) {
    Rng rng(derive_seed(learn_seed, static_cast<std::uint64_t>(learn_steps_)));
    const auto idx = buffer_.sample(static_cast<std::size_t>(cfg_.batch_size), rng);
    std::vector<Observation> s, next;
    std::vector<int> actions;
    std::vector<std::size_t> bootstrap;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Transition& t = buffer_[idx[i]];
      s.push_back(t.s);
      actions.push_back(t.action);
      if (!t.terminal) {
        bootstrap.push_back(i);
        next.push_back(t.s_next);
      }
    }
    std::vector<double> targets(idx.size());
    const auto q_next = next.empty() ? std::vector<std::vector<double>>{} : target_.forward_q(next);
    for (std::size_t i = 0, j = 0; i < idx.size(); ++i) {
      const Transition& t = buffer_[idx[i]];
      if (j < bootstrap.size() && bootstrap[j] == i) {
        targets[i] = deepq_target(t.reward, false, cfg_.gamma, q_next[j], t.s_next.mask());
        ++j;
      } else {
        targets[i] = deepq_target(t.reward, true, cfg_.gamma, {}, t.s_next.mask());
      }
    }
    Graph g;
    const auto loss = loss_deepq(g, net_, s, actions, targets);
    loss_sum_ += g.value(loss)[0];
    ++losses_since_;
    g.backward(loss);
    net_.optimizer_step(cfg_.learning_rate);
    ++learn_steps_;
    if (learn_steps_ % cfg_.target_sync == 0) target_ = net_;
  }

  void emit(int k, const TrainOptions& opts) {
    checkpoint_ = k;
    net_.metadata = {{"algorithm", "deepq"}, {"checkpoint", k}, {"env_steps", env_steps_}};
    net_.save(run_.checkpoint(k));
    std::ostringstream payload(std::ios::binary);
    binio::put_string(payload, target_.serialize());
    buffer_.write(payload);
    const nlohmann::json counters = {{"checkpoint", k},
                                     {"env_steps", env_steps_},
                                     {"learn_steps", learn_steps_},
                                     {"episodes", episodes_}};
    write_file(run_.state(k), pack_state(counters, payload.str()));
    const double eps = epsilon_schedule(env_steps_, cfg_.epsilon_horizon, cfg_.epsilon_start, cfg_.epsilon_end);
    append_log(run_.training_log(), "checkpoint,episodes,env_steps,learn_steps,epsilon,mean_loss,mean_decisions",
               std::to_string(k) + "," + std::to_string(episodes_) + "," + std::to_string(env_steps_) + "," +
                   std::to_string(learn_steps_) + "," + fixed(eps) + "," +
                   fixed(losses_since_ ? loss_sum_ / static_cast<double>(losses_since_) : 0.0, 9) + "," +
                   fixed(episodes_since_ ? decisions_sum_ / static_cast<double>(episodes_since_) : 0.0));
    if (opts.write_episodes && k > 0) write_episodes(run_, k, traces_);
    traces_.clear();
    loss_sum_ = decisions_sum_ = 0.0;
    losses_since_ = episodes_since_ = 0;
  }

  DeepQConfig cfg_;
  std::vector<Formula> train_;
  RunDirectory run_;
  Network net_;
  Network target_;
  ReplayBuffer buffer_;
  int checkpoint_ = -1;
  std::int64_t env_steps_ = 0;
  std::int64_t learn_steps_ = 0;
  std::int64_t episodes_ = 0;
  double loss_sum_ = 0.0;
  double decisions_sum_ = 0.0;
  std::int64_t losses_since_ = 0;
  std::int64_t episodes_since_ = 0;
  std::int64_t idle_episodes_ = 0;
  std::vector<EpisodeTrace> traces_;
};

// ---------------------------------------------------------------------------
// AlphaZero

void write_sample(std::ostream& os, const SelfPlaySample& s) {
  write_observation(os, s.s);
  binio::put_doubles(os, s.target_pi);
  binio::put<double>(os, s.target_z);
  binio::put_string(os, s.instance_id);
  binio::put<std::int32_t>(os, s.move);
}

SelfPlaySample read_sample(std::istream& is) {
  SelfPlaySample s;
  s.s = read_observation(is);
  s.target_pi = binio::get_doubles(is, 1 << 20);
  s.target_z = binio::get<double>(is);
  s.instance_id = binio::get_string(is, 4096);
  s.move = binio::get<std::int32_t>(is);
  return s;
}

class ZeroRun {
 public:
  ZeroRun(ZeroConfig cfg, std::vector<Formula> train, RunDirectory run)
      : cfg_(std::move(cfg)), train_(std::move(train)), run_(std::move(run)), net_(cfg_.arch, cfg_.seed) {}

  void resume(int k) {
    net_ = Network::load(run_.checkpoint(k));
    std::istringstream is(std::ios::binary);
    const auto c = unpack_state(run_.state(k), is);
    iteration_ = c.at("checkpoint").get<int>();
    episodes_ = c.at("episodes").get<std::int64_t>();
    const auto n = binio::get<std::uint64_t>(is);
    window_.clear();
    for (std::uint64_t i = 0; i < n; ++i) window_.push_back(read_sample(is));
    truncate_log(run_.training_log(), k);
  }

  std::vector<fs::path> run(const TrainOptions& opts) {
    std::vector<fs::path> out;
    if (iteration_ < 0) {
      iteration_ = 0;
      emit(opts, 0.0, {});
      out.push_back(run_.checkpoint(0));
      if (opts.stop_after && *opts.stop_after <= 0) return out;
    }
    const std::uint64_t play_seed = derive_seed(cfg_.seed, std::string_view("zero-selfplay"));
    const std::uint64_t train_seed = derive_seed(cfg_.seed, std::string_view("zero-train"));
    while (iteration_ < cfg_.iterations) {
      // Self-play against a frozen snapshot; episodes are independent.
      const Network snapshot = net_;
      std::vector<SelfPlayEpisode> played(static_cast<std::size_t>(cfg_.episodes_per_iteration));
      parallel_for(played.size(), opts.threads, [&](std::size_t e) {
        const auto g = static_cast<std::uint64_t>(episodes_) + e;
        played[e] = self_play_episode(train_[g % train_.size()], snapshot, cfg_.search, cfg_.d_cap,
                                      derive_seed(play_seed, g));
      });
      episodes_ += cfg_.episodes_per_iteration;
      std::vector<EpisodeTrace> traces;
      for (auto& ep : played) {
        for (auto& s : ep.samples) window_.push_back(std::move(s));
        traces.push_back(std::move(ep.trace));
      }
      while (window_.size() > static_cast<std::size_t>(cfg_.window)) window_.pop_front();

      ++iteration_;
      Rng rng(derive_seed(train_seed, static_cast<std::uint64_t>(iteration_)));
      double loss_sum = 0.0;
      for (int step = 0; step < cfg_.train_steps && !window_.empty(); ++step) {
        const std::size_t b = static_cast<std::size_t>(cfg_.batch_size);
        const int a = cfg_.arch.num_actions();
        std::vector<Observation> obs;
        std::vector<double> z;
        Tensor pi({static_cast<int>(b), a});
        for (std::size_t i = 0; i < b; ++i) {
          const auto& s = window_[rng.below(window_.size())];
          z.push_back(s.target_z);
          const auto row = pi.data().begin() + static_cast<std::ptrdiff_t>(i) * a;
          if (cfg_.augment) {
            const Symmetry sym = Symmetry::random(s.s.rows(), s.s.vars(), rng);
            obs.push_back(sym.apply(s.s));
            const auto moved = sym.apply(std::span<const double>(s.target_pi));
            std::copy(moved.begin(), moved.end(), row);
          } else {
            obs.push_back(s.s);
            std::copy(s.target_pi.begin(), s.target_pi.end(), row);
          }
        }
        Graph g;
        const auto loss = loss_alphazero(g, net_, obs, pi, z, cfg_.l2);
        loss_sum += g.value(loss)[0];
        g.backward(loss);
        net_.optimizer_step(cfg_.learning_rate);
      }
      emit(opts, cfg_.train_steps ? loss_sum / cfg_.train_steps : 0.0, traces);
      out.push_back(run_.checkpoint(iteration_));
      if (opts.stop_after && iteration_ >= *opts.stop_after) break;
    }
    return out;
  }

 private:
  void emit(const TrainOptions& opts, double mean_loss, const std::vector<EpisodeTrace>& traces) {
    const int k = iteration_;
    net_.metadata = {{"algorithm", "alphazero"}, {"checkpoint", k}, {"episodes", episodes_}};
    net_.save(run_.checkpoint(k));
    std::ostringstream payload(std::ios::binary);
    binio::put<std::uint64_t>(payload, window_.size());
    for (const auto& s : window_) write_sample(payload, s);
    write_file(run_.state(k), pack_state({{"checkpoint", k}, {"episodes", episodes_}}, payload.str()));
    double decisions = 0.0, z = 0.0;
    for (const auto& t : traces) {
      decisions += t.outcome.decisions;
      z += t.outcome.z;
    }
    const double n = traces.empty() ? 1.0 : static_cast<double>(traces.size());
    append_log(run_.training_log(), "checkpoint,episodes,samples,mean_loss,mean_decisions,mean_z",
               std::to_string(k) + "," + std::to_string(episodes_) + "," + std::to_string(window_.size()) + "," +
                   fixed(mean_loss, 9) + "," + fixed(decisions / n) + "," + fixed(z / n));
    if (opts.write_episodes && k > 0) write_episodes(run_, k, traces);
  }

  ZeroConfig cfg_;
  std::vector<Formula> train_;
  RunDirectory run_;
  Network net_;
  int iteration_ = -1;
  std::int64_t episodes_ = 0;
  std::deque<SelfPlaySample> window_;
};

}  // namespace

SelfPlayEpisode self_play_episode(const Formula& f, const Network& net, const SearchConfig& search, int d_cap,
                                  std::uint64_t seed) {
  SelfPlayEpisode ep;
  ep.trace.instance_id = f.id();
  SatGame env(f, {.d_cap = d_cap});
  const NetworkEvaluator eval(net);
  Mcts tree(eval, search, derive_seed(seed, std::uint64_t{1}));
  Rng rng(derive_seed(seed, std::uint64_t{2}));
  int move = 0;
  while (!env.terminal()) {
    const Observation obs = env.observe();
    const SearchResult r = tree.search(env, true);
    int a;
    if (move < search.temperature_moves) {
      double u = rng.uniform();
      a = -1;
      for (std::size_t i = 0; i < r.pi.size(); ++i) {
        if (r.pi[i] <= 0.0) continue;
        a = static_cast<int>(i);
        if ((u -= r.pi[i]) < 0.0) break;
      }
    } else {
      a = argmax_legal(policy_from_visits(r.visits, 0.0), obs.mask());
    }
    const auto step = env.step(Action::decode(a));
    tree.advance(Action::decode(a));
    ep.trace.observation_digests.push_back(obs.digest());
    ep.trace.actions.push_back(a);
    ep.trace.rewards.push_back(step.reward);
    ep.samples.push_back({obs, r.pi, 0.0, f.id(), move});
    ++move;
  }
  ep.trace.outcome = env.outcome();
  for (auto& s : ep.samples) s.target_z = ep.trace.outcome.z;
  return ep;
}

std::vector<fs::path> deepq_train(const DeepQConfig& cfg, const std::vector<Formula>& train, const fs::path& run_dir,
                                  const TrainOptions& opts) {
  cfg.validate();
  const RunDirectory run{run_dir};
  write_run_config(run, "deepq", cfg.to_json(), train);
  DeepQRun r(cfg, train, run);
  return r.run(opts);
}

std::vector<fs::path> alphazero_train(const ZeroConfig& cfg, const std::vector<Formula>& train,
                                      const fs::path& run_dir, const TrainOptions& opts) {
  cfg.validate();
  const RunDirectory run{run_dir};
  write_run_config(run, "alphazero", cfg.to_json(), train);
  ZeroRun r(cfg, train, run);
  return r.run(opts);
}

std::vector<fs::path> resume_training(const fs::path& run_dir, const TrainOptions& opts, std::optional<int> from) {
  const RunDirectory run{run_dir};
  const auto j = nlohmann::json::parse(read_file(run.config()));
  const auto ks = run.checkpoints();
  if (ks.empty()) throw std::runtime_error("no checkpoints to resume from in " + run_dir.string());
  const int k = from.value_or(ks.back());
  if (!fs::exists(run.checkpoint(k)) || !fs::exists(run.state(k))) {
    throw std::runtime_error("checkpoint " + std::to_string(k) + " or its trainer state is missing in " +
                             run_dir.string());
  }
  const auto set = load_instance_set(run.root / j.value("train_set", std::string("train")));
  const std::string algorithm = j.at("algorithm").get<std::string>();
  if (algorithm == "deepq") {
    DeepQRun r(DeepQConfig::from_json(j.at("config")), set.formulas, run);
    r.resume(k);
    return r.run(opts);
  }
  if (algorithm == "alphazero") {
    ZeroRun r(ZeroConfig::from_json(j.at("config")), set.formulas, run);
    r.resume(k);
    return r.run(opts);
  }
  throw std::runtime_error("unknown algorithm '" + algorithm + "' in " + run.config().string());
}

}  // namespace satgame
