#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "satgame/game.hpp"
#include "satgame/tensor.hpp"

namespace satgame {

enum class HeadKind { policy_value, q };
std::string_view to_string(HeadKind h);
HeadKind head_from_string(std::string_view s);

/// Layer sizes. Input is rows x vars x 2; every conv is same-padded,
/// stride 1 and followed by relu; then one dense+relu trunk layer.
struct Architecture {
  int rows = 91;
  int vars = 20;
  std::vector<int> conv_filters{32, 64};
  int kernel = 3;
  int dense_units = 256;
  HeadKind head = HeadKind::policy_value;

  int num_actions() const { return 2 * vars; }
  void validate() const;
  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
  bool operator==(const Architecture&) const = default;
};

struct PolicyValue {
  std::vector<double> pi;
  double v = 0.0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Network {
 public:
  /// He-uniform weights, zero biases, drawn from `seed`.
  Network(Architecture arch, std::uint64_t seed);

  const Architecture& arch() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t num_parameters() const;

  struct Heads {
    Graph::Var policy;  // [N, 2V] logits, policy_value head only
    Graph::Var value;   // [N, 1] after tanh, policy_value head only
    Graph::Var q;       // [N, 2V], q head only
    std::vector<Graph::Var> params;
  };

  /// Records the forward pass with gradients flowing into the parameters.
  /// `input` is a [N, rows, vars, 2] node, usually from batch_input().
  Heads record(Graph& g, Graph::Var input);

  /// Stacks observations into [N, rows, vars, 2]; throws ShapeError on a
  /// size that does not fit the architecture.
  Tensor batch_input(std::span<const Observation> obs) const;

  PolicyValue forward_policy_value(const Observation& obs) const;
  std::vector<PolicyValue> forward_policy_value(std::span<const Observation> obs) const;
  /// Raw values for every action; consumers apply obs.mask() themselves.
  std::vector<double> forward_q(const Observation& obs) const;
  std::vector<std::vector<double>> forward_q(std::span<const Observation> obs) const;

  /// Adam update from the accumulated gradients, then clears them. Throws
  /// std::logic_error when no parameter received a gradient.
  void optimizer_step(double lr, const AdamConfig& cfg = {});
  std::int64_t optimizer_steps() const { return adam_step_; }

  void zero_grad();
  std::uint64_t digest() const;

  /// Free-form JSON stored alongside the weights (trainer bookkeeping).
  nlohmann::json metadata = nlohmann::json::object();

  /// Checkpoint bytes; save() writes exactly these.
  std::string serialize() const;
  static Network deserialize(std::string_view bytes, const std::string& origin = "memory");
  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);

  bool operator==(const Network& o) const;

 private:
  Heads build(Graph& g, Graph::Var input, bool track) const;

  Architecture arch_;
  std::uint64_t seed_ = 0;
  std::vector<Parameter> params_;
  std::int64_t adam_step_ = 0;
  std::vector<Tensor> adam_m_;
  std::vector<Tensor> adam_v_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cross-entropy against `target_pi` rows (masked log-softmax), plus mean
/// squared value error against `target_z`, plus l2 * sum of squared
/// parameters. Returns the scalar loss node.
Graph::Var loss_alphazero(Graph& g, Network& net, std::span<const Observation> obs,
                          const Tensor& target_pi, std::span<const double> target_z,
                          double l2 = 1e-4);

/// Mean Huber loss between Q(s, a) and fixed targets.
Graph::Var loss_deepq(Graph& g, Network& net, std::span<const Observation> obs,
                      std::span<const int> actions, std::span<const double> targets);

}  // namespace satgame
