#include "satgame/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "satgame/util.hpp"

namespace satgame {

std::string_view to_string(HeadKind h) { return h == HeadKind::q ? "q" : "policy_value"; }

HeadKind head_from_string(std::string_view s) {
  if (s == "policy_value") return HeadKind::policy_value;
  if (s == "q") return HeadKind::q;
  throw std::invalid_argument("unknown head kind '" + std::string(s) + "'");
}

void Architecture::validate() const {
  if (rows < 1 || vars < 1) throw ShapeError("architecture: rows and vars must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw ShapeError("architecture: kernel must be odd and positive");
  if (dense_units < 1) throw ShapeError("architecture: dense_units must be positive");
  for (int f : conv_filters) {
    if (f < 1) throw ShapeError("architecture: conv filter counts must be positive");
  }
}

nlohmann::json Architecture::to_json() const {
  return {{"rows", rows},           {"vars", vars},
          {"conv_filters", conv_filters}, {"kernel", kernel},
          {"dense_units", dense_units}, {"head", to_string(head)}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  a.rows = j.value("rows", a.rows);
  a.vars = j.value("vars", a.vars);
  a.conv_filters = j.value("conv_filters", a.conv_filters);
  a.kernel = j.value("kernel", a.kernel);
  a.dense_units = j.value("dense_units", a.dense_units);
  a.head = head_from_string(j.value("head", std::string(to_string(a.head))));
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------

Network::Network(Architecture arch, std::uint64_t seed) : arch_(std::move(arch)), seed_(seed) {
  arch_.validate();
  Rng rng(seed);
  auto he = [&](std::string name, Shape shape, int fan_in, double gain = 1.0) {
    Tensor t(std::move(shape));
    const double limit = gain * std::sqrt(6.0 / fan_in);
    for (auto& x : t.data()) x = rng.uniform(-limit, limit);
    params_.emplace_back(std::move(name), std::move(t));
  };
  auto zeros = [&](std::string name, Shape shape) {
    params_.emplace_back(std::move(name), Tensor(std::move(shape)));
  };

  int cin = 2;
  for (std::size_t i = 0; i < arch_.conv_filters.size(); ++i) {
    const int k = arch_.kernel, cout = arch_.conv_filters[i];
    he("conv" + std::to_string(i) + ".w", {k, k, cin, cout}, k * k * cin);
    zeros("conv" + std::to_string(i) + ".b", {cout});
    cin = cout;
  }
  const int flat = arch_.rows * arch_.vars * cin;
  he("dense.w", {flat, arch_.dense_units}, flat);
  zeros("dense.b", {arch_.dense_units});
  const int a = arch_.num_actions();
  // Action heads start at 1% scale (same argmax, tiny spread). Rows of actions
  // that are rarely trained keep their init; at full scale that noise swamps
  // what was learned and, for Q, feeds the bootstrap max until Q drifts upward.
  if (arch_.head == HeadKind::policy_value) {
    he("policy.w", {arch_.dense_units, a}, arch_.dense_units, 0.01);
    zeros("policy.b", {a});
    he("value.w", {arch_.dense_units, 1}, arch_.dense_units);
    zeros("value.b", {1});
  } else {
    he("q.w", {arch_.dense_units, a}, arch_.dense_units, 0.01);
    zeros("q.b", {a});
  }
  for (const auto& p : params_) {
    adam_m_.emplace_back(p.value.shape());
    adam_v_.emplace_back(p.value.shape());
  }
}

std::size_t Network::num_parameters() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Tensor Network::batch_input(std::span<const Observation> obs) const {
  const std::size_t per = static_cast<std::size_t>(arch_.rows) * static_cast<std::size_t>(arch_.vars) * 2;
  Tensor x({static_cast<int>(obs.size()), arch_.rows, arch_.vars, 2});
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].rows() != arch_.rows || obs[i].vars() != arch_.vars) {
      throw ShapeError("observation " + std::to_string(obs[i].rows()) + "x" +
                       std::to_string(obs[i].vars()) + "x2 does not fit network input " +
                       std::to_string(arch_.rows) + "x" + std::to_string(arch_.vars) + "x2");
    }
    obs[i].write_dense(x.data().subspan(i * per, per));
  }
  return x;
}

Network::Heads Network::build(Graph& g, Graph::Var input, bool track) const {
  Heads heads;
  auto p = [&]() {
    const std::size_t i = heads.params.size();
    heads.params.push_back(track ? g.parameter(const_cast<Parameter&>(params_[i]))
                                 : g.view(params_[i].value));
    return heads.params.back();
  };
  Graph::Var h = input;
  for (std::size_t i = 0; i < arch_.conv_filters.size(); ++i) {
    const auto w = p();
    const auto b = p();
    h = g.relu(g.conv2d(h, w, b));
  }
  {
    const auto w = p();
    const auto b = p();
    h = g.relu(g.dense(h, w, b));
  }
  if (arch_.head == HeadKind::policy_value) {
    const auto pw = p();
    const auto pb = p();
    heads.policy = g.dense(h, pw, pb);
    const auto vw = p();
    const auto vb = p();
    heads.value = g.tanh(g.dense(h, vw, vb));
  } else {
    const auto qw = p();
    const auto qb = p();
    heads.q = g.dense(h, qw, qb);
  }
  return heads;
}

Network::Heads Network::record(Graph& g, Graph::Var input) { return build(g, input, true); }

std::vector<PolicyValue> Network::forward_policy_value(std::span<const Observation> obs) const {
  if (arch_.head != HeadKind::policy_value) throw ShapeError("network has no policy/value head");
  const Tensor x = batch_input(obs);
  Graph g;
  const Heads h = build(g, g.view(x), false);
  const Tensor& logits = g.value(h.policy);
  const Tensor& value = g.value(h.value);
  const auto a = static_cast<std::size_t>(arch_.num_actions());
  // tanh rounds to exactly +-1 for large inputs; keep v strictly inside.
  const double vmax = std::nextafter(1.0, 0.0);
  std::vector<PolicyValue> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out[i].pi = masked_softmax(logits.data().subspan(i * a, a), obs[i].mask());
    out[i].v = std::clamp(value[i], -vmax, vmax);
  }
  return out;
}

PolicyValue Network::forward_policy_value(const Observation& obs) const {
  return std::move(forward_policy_value(std::span<const Observation>(&obs, 1))[0]);
}

std::vector<std::vector<double>> Network::forward_q(std::span<const Observation> obs) const {
  if (arch_.head != HeadKind::q) throw ShapeError("network has no Q head");
  const Tensor x = batch_input(obs);
  Graph g;
  const Heads h = build(g, g.view(x), false);
  const Tensor& q = g.value(h.q);
  const auto a = static_cast<std::size_t>(arch_.num_actions());
  std::vector<std::vector<double>> out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out[i].assign(q.data().begin() + static_cast<std::ptrdiff_t>(i * a),
                  q.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * a));
  }
  return out;
}

std::vector<double> Network::forward_q(const Observation& obs) const {
  return std::move(forward_q(std::span<const Observation>(&obs, 1))[0]);
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Network::optimizer_step(double lr, const AdamConfig& cfg) {
  bool any = false;
  for (const auto& p : params_) any = any || p.has_grad;
  if (!any) throw std::logic_error("optimizer step without gradients (run backward first)");
  ++adam_step_;
  const double t = static_cast<double>(adam_step_);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    auto w = p.value.data();
    auto m = adam_m_[i].data();
    auto v = adam_v_[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gr = p.has_grad ? p.grad[j] : 0.0;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gr;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gr * gr;
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.epsilon);
    }
    p.zero_grad();
  }
}

std::uint64_t Network::digest() const {
  Digest d;
  for (const auto& p : params_) d.range(p.value.data());
  d.value(adam_step_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    d.range(adam_m_[i].data());
    d.range(adam_v_[i].data());
  }
  return d.get();
}

bool Network::operator==(const Network& o) const {
  if (!(arch_ == o.arch_) || seed_ != o.seed_ || adam_step_ != o.adam_step_ ||
      params_.size() != o.params_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != o.params_[i].name || !(params_[i].value == o.params_[i].value) ||
        !(adam_m_[i] == o.adam_m_[i]) || !(adam_v_[i] == o.adam_v_[i])) {
      return false;
    }
  }
  return metadata == o.metadata;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, version, JSON header, named parameter blobs, Adam
// state, then an FNV-1a checksum of everything before it.

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'G', 'C', 'K', 'P', 'T'};

void put_tensor(std::ostream& os, const Tensor& t) {
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) binio::put<std::int32_t>(os, d);
  binio::put_doubles(os, t.data());
}

Tensor get_tensor(std::istream& is) {
  const auto rank = binio::get<std::uint32_t>(is);
  if (rank > 8) throw binio::FormatError("tensor rank out of range");
  Shape s(rank);
  for (auto& d : s) {
    d = binio::get<std::int32_t>(is);
    if (d < 0) throw binio::FormatError("negative dimension");
  }
  auto data = binio::get_doubles(is, shape_size(s));
  if (data.size() != shape_size(s)) throw binio::FormatError("tensor data does not match its shape");
  return Tensor(std::move(s), std::move(data));
}

}  // namespace

std::string Network::serialize() const {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, sizeof kMagic);
  binio::put<std::uint32_t>(os, kCheckpointVersion);
  const nlohmann::json header = {{"architecture", arch_.to_json()},
                                 {"seed", seed_},
                                 {"metadata", metadata}};
  binio::put_string(os, header.dump());
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    binio::put_string(os, p.name);
    put_tensor(os, p.value);
  }
  binio::put<std::int64_t>(os, adam_step_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    put_tensor(os, adam_m_[i]);
    put_tensor(os, adam_v_[i]);
  }
  std::string bytes = std::move(os).str();
  Digest d;
  d.bytes(bytes.data(), bytes.size());
  std::ostringstream tail(std::ios::binary);
  binio::put<std::uint64_t>(tail, d.get());
  bytes += tail.str();
  return bytes;
}

void Network::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Network Network::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

Network Network::deserialize(std::string_view bytes, const std::string& origin) {
  const std::string where = " in " + origin;
  if (bytes.size() < sizeof kMagic || bytes.compare(0, sizeof kMagic, kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)" + where);
  }
  if (bytes.size() < sizeof kMagic + 4 + 8) throw CheckpointError("truncated checkpoint" + where);
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + sizeof kMagic, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + where);
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, 8);
  Digest d;
  d.bytes(bytes.data(), body);
  if (d.get() != stored) throw CheckpointError("checkpoint is truncated or corrupted" + where);

  try {
    std::istringstream is(std::string(bytes.substr(sizeof kMagic + 4, body - sizeof kMagic - 4)), std::ios::binary);
    const auto header = nlohmann::json::parse(binio::get_string(is, 1 << 24));
    Network net(Architecture::from_json(header.at("architecture")),
                header.at("seed").get<std::uint64_t>());
    net.metadata = header.value("metadata", nlohmann::json::object());
    const auto count = binio::get<std::uint32_t>(is);
    if (count != net.params_.size()) {
      throw CheckpointError("checkpoint has " + std::to_string(count) + " parameters, architecture expects " +
                            std::to_string(net.params_.size()) + where);
    }
    for (auto& p : net.params_) {
      const auto name = binio::get_string(is, 256);
      Tensor t = get_tensor(is);
      if (name != p.name || t.shape() != p.value.shape()) {
        throw CheckpointError("parameter " + name + shape_string(t.shape()) + " does not match " +
                              p.name + shape_string(p.value.shape()) + where);
      }
      p.value = std::move(t);
    }
    net.adam_step_ = binio::get<std::int64_t>(is);
    for (std::size_t i = 0; i < net.params_.size(); ++i) {
      for (auto* slot : {&net.adam_m_[i], &net.adam_v_[i]}) {
        Tensor t = get_tensor(is);
        if (t.shape() != slot->shape()) throw CheckpointError("optimizer state shape mismatch" + where);
        *slot = std::move(t);
      }
    }
    if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes" + where);
    return net;
  } catch (const binio::FormatError& e) {
    throw CheckpointError(std::string(e.what()) + where);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what() + where);
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string(e.what()) + where);
  }
}

// ---------------------------------------------------------------------------
// Losses

Graph::Var loss_alphazero(Graph& g, Network& net, std::span<const Observation> obs,
                          const Tensor& target_pi, std::span<const double> target_z, double l2) {
  if (target_z.size() != obs.size()) throw ShapeError("loss_alphazero: one value target per observation");
  const int a = net.arch().num_actions();
  const Tensor x = net.batch_input(obs);
  Tensor mask({static_cast<int>(obs.size()), a});
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (int j = 0; j < a; ++j) mask[i * static_cast<std::size_t>(a) + static_cast<std::size_t>(j)] = obs[i].mask()[static_cast<std::size_t>(j)];
  }
  Tensor pi = target_pi;
  pi.reshape({static_cast<int>(obs.size()), a});
  Tensor z({static_cast<int>(obs.size())}, std::vector<double>(target_z.begin(), target_z.end()));

  const auto heads = net.record(g, g.constant(x));
  auto loss = g.add(g.masked_softmax_cross_entropy(heads.policy, pi, mask),
                    g.mean_squared_error(heads.value, z));
  if (l2 > 0.0) {
    for (const auto p : heads.params) loss = g.add(loss, g.scale(g.sum_squares(p), l2));
  }
  return loss;
}

Graph::Var loss_deepq(Graph& g, Network& net, std::span<const Observation> obs,
                      std::span<const int> actions, std::span<const double> targets) {
  if (actions.size() != obs.size() || targets.size() != obs.size()) {
    throw ShapeError("loss_deepq: one action and target per observation");
  }
  const auto heads = net.record(g, g.constant(net.batch_input(obs)));
  const auto q_sa = g.gather(heads.q, std::vector<int>(actions.begin(), actions.end()));
  return g.huber(q_sa, Tensor({static_cast<int>(targets.size())},
                              std::vector<double>(targets.begin(), targets.end())));
}

}  // namespace satgame
