#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace satgame {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string shape_string(const Shape& s);

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void reshape(Shape s);
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A trainable tensor with its gradient buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() {
    grad.fill(0.0);
    has_grad = false;
  }
};

namespace kernels {

// C[M,N] (+)= A[M,K] * B[K,N]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, int k,
            int n, bool accumulate);
// C[K,N] += A[M,K]^T * B[M,N]
void matmul_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> c, int m,
                   int k, int n);
// C[M,K] += A[M,N] * B[K,N]^T
void matmul_nt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c, int m,
                   int n, int k);

// Same-padded, stride-1 patches: x [H,W,C] -> cols [H*W, K*K*C].
void im2col(std::span<const double> x, int h, int w, int c, int k, std::span<double> cols);
// Adjoint of im2col: scatter-adds cols back into x.
void col2im_acc(std::span<const double> cols, int h, int w, int c, int k, std::span<double> x);

}  // namespace kernels

/// Reverse-mode tape. Operations append nodes; backward() walks them in
/// reverse creation order, accumulates into Parameter::grad, then clears
/// the tape.
class Graph {
 public:
  struct Var {
    int id = -1;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor t);
  /// Gradient flows into p.grad on backward().
  Var parameter(Parameter& p);
  /// Read-only view of an external tensor; no gradient, no copy. The tensor
  /// must outlive the graph.
  Var view(const Tensor& t);

  /// x [N,H,W,Cin], w [K,K,Cin,Cout], b [Cout] -> [N,H,W,Cout]; same padding.
  Var conv2d(Var x, Var w, Var b);
  /// x [N,...] flattened to [N,In]; w [In,Out]; b [Out] -> [N,Out].
  Var dense(Var x, Var w, Var b);
  Var relu(Var x);
  Var tanh(Var x);
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  Var sum(Var a);
  Var sum_squares(Var a);
  /// Picks column idx[n] of row n: [N,A] -> [N].
  Var gather(Var x, std::vector<int> idx);

  /// Mean over rows of cross-entropy between `target` rows and the masked
  /// log-softmax of `logits` rows. Masked-out logits are replaced by -1e30.
  Var masked_softmax_cross_entropy(Var logits, const Tensor& target, const Tensor& mask);
  /// Mean of (x - target)^2.
  Var mean_squared_error(Var x, const Tensor& target);
  /// Mean Huber loss (delta = 1) of x - target; target carries no gradient.
  Var huber(Var x, const Tensor& target);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Throws std::logic_error when nothing is recorded or `loss` is not a
  /// scalar node of this tape.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    Parameter* param = nullptr;
    std::function<void(Graph&, Node&)> backprop;

    const Tensor& val() const { return external ? *external : value; }
  };

  Var push(Tensor value, std::function<void(Graph&, Node&)> backprop);
  Node& node(Var v);
  Tensor& grad_of(Var v);

  std::vector<Node> nodes_;
};

/// Softmax of `logits` over entries with mask[i] != 0; zero elsewhere.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

inline constexpr double kMaskedLogit = -1e30;

}  // namespace satgame
