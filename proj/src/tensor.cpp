#include "satgame/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace satgame {

std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data of length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

void Tensor::reshape(Shape s) {
  if (shape_size(s) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(s));
  }
  shape_ = std::move(s);
}

// ---------------------------------------------------------------------------
// Kernels. Loop orders keep the innermost loop contiguous so the compiler can
// vectorize, and are fixed so results are reproducible bit for bit.

namespace kernels {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, int m, int k,
            int n, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    double* crow = c.data() + static_cast<std::ptrdiff_t>(i) * n;
    const double* arow = a.data() + static_cast<std::ptrdiff_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + static_cast<std::ptrdiff_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> b, std::span<double> c, int m,
                   int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a.data() + static_cast<std::ptrdiff_t>(i) * k;
    const double* brow = b.data() + static_cast<std::ptrdiff_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c.data() + static_cast<std::ptrdiff_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc(std::span<const double> a, std::span<const double> b, std::span<double> c, int m,
                   int n, int k) {
  // Transpose B[K,N] once so the inner loop runs along contiguous memory.
  std::vector<double> bt(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p) {
    for (int j = 0; j < n; ++j) {
      bt[static_cast<std::size_t>(j) * static_cast<std::size_t>(k) + static_cast<std::size_t>(p)] =
          b[static_cast<std::size_t>(p) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    }
  }
  matmul(a, bt, c, m, n, k, true);
}

void im2col(std::span<const double> x, int h, int w, int c, int k, std::span<double> cols) {
  const int pad = k / 2;
  const std::size_t row_len = static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * static_cast<std::size_t>(c);
  std::fill(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(row_len) * h * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      double* row = cols.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx)) * row_len;
      for (int dy = 0; dy < k; ++dy) {
        const int sy = y + dy - pad;
        if (sy < 0 || sy >= h) continue;
        for (int dx = 0; dx < k; ++dx) {
          const int sx = xx + dx - pad;
          if (sx < 0 || sx >= w) continue;
          const double* src = x.data() + (static_cast<std::size_t>(sy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(sx)) * static_cast<std::size_t>(c);
          std::copy(src, src + c, row + (static_cast<std::size_t>(dy) * static_cast<std::size_t>(k) + static_cast<std::size_t>(dx)) * static_cast<std::size_t>(c));
        }
      }
    }
  }
}

void col2im_acc(std::span<const double> cols, int h, int w, int c, int k, std::span<double> x) {
  const int pad = k / 2;
  const std::size_t row_len = static_cast<std::size_t>(k) * static_cast<std::size_t>(k) * static_cast<std::size_t>(c);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const double* row = cols.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx)) * row_len;
      for (int dy = 0; dy < k; ++dy) {
        const int sy = y + dy - pad;
        if (sy < 0 || sy >= h) continue;
        for (int dx = 0; dx < k; ++dx) {
          const int sx = xx + dx - pad;
          if (sx < 0 || sx >= w) continue;
          double* dst = x.data() + (static_cast<std::size_t>(sy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(sx)) * static_cast<std::size_t>(c);
          const double* src = row + (static_cast<std::size_t>(dy) * static_cast<std::size_t>(k) + static_cast<std::size_t>(dx)) * static_cast<std::size_t>(c);
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Graph

Graph::Var Graph::push(Tensor value, std::function<void(Graph&, Node&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Graph::Node& Graph::node(Var v) {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) throw std::logic_error("Graph: stale variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor& Graph::value(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) throw std::logic_error("Graph: stale variable");
  return nodes_[static_cast<std::size_t>(v.id)].val();
}

Tensor& Graph::grad_of(Var v) {
  Node& n = node(v);
  if (n.grad.size() != n.val().size()) n.grad = Tensor(n.val().shape());
  return n.grad;
}

Graph::Var Graph::constant(Tensor t) { return push(std::move(t), nullptr); }

Graph::Var Graph::parameter(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Graph::Var Graph::view(const Tensor& t) {
  Node n;
  n.external = &t;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Graph::Var Graph::conv2d(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1 || wv.dim(0) != wv.dim(1) ||
      wv.dim(0) % 2 == 0 || wv.dim(2) != xv.dim(3) || bv.dim(0) != wv.dim(3)) {
    throw ShapeError("conv2d: incompatible shapes x" + shape_string(xv.shape()) + " w" +
                     shape_string(wv.shape()) + " b" + shape_string(bv.shape()));
  }
  const int n = xv.dim(0), h = xv.dim(1), wd = xv.dim(2), cin = xv.dim(3);
  const int k = wv.dim(0), cout = wv.dim(3);
  const int patch = k * k * cin;
  const std::size_t in_stride = static_cast<std::size_t>(h) * static_cast<std::size_t>(wd) * static_cast<std::size_t>(cin);
  const std::size_t out_stride = static_cast<std::size_t>(h) * static_cast<std::size_t>(wd) * static_cast<std::size_t>(cout);

  Tensor out({n, h, wd, cout});
  std::vector<double> cols(static_cast<std::size_t>(h) * static_cast<std::size_t>(wd) * static_cast<std::size_t>(patch));
  for (int s = 0; s < n; ++s) {
    kernels::im2col(xv.data().subspan(s * in_stride, in_stride), h, wd, cin, k, cols);
    auto o = out.data().subspan(s * out_stride, out_stride);
    for (int p = 0; p < h * wd; ++p) std::copy(bv.data().begin(), bv.data().end(), o.begin() + static_cast<std::ptrdiff_t>(p) * cout);
    kernels::matmul(cols, wv.data(), o, h * wd, patch, cout, true);
  }

  return push(std::move(out), [=](Graph& g, Node& self) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    const bool need_x = g.node(x).backprop || g.node(x).param;
    Tensor& gw = g.grad_of(w);
    Tensor& gb = g.grad_of(b);
    Tensor* gx = need_x ? &g.grad_of(x) : nullptr;
    std::vector<double> cols(static_cast<std::size_t>(h) * static_cast<std::size_t>(wd) * static_cast<std::size_t>(patch));
    std::vector<double> dcols(need_x ? cols.size() : 0);
    for (int s = 0; s < n; ++s) {
      auto dout = self.grad.data().subspan(s * out_stride, out_stride);
      kernels::im2col(xv.data().subspan(s * in_stride, in_stride), h, wd, cin, k, cols);
      kernels::matmul_tn_acc(cols, dout, gw.data(), h * wd, patch, cout);
      for (int p = 0; p < h * wd; ++p) {
        for (int c = 0; c < cout; ++c) gb[static_cast<std::size_t>(c)] += dout[static_cast<std::size_t>(p) * static_cast<std::size_t>(cout) + static_cast<std::size_t>(c)];
      }
      if (gx) {
        std::fill(dcols.begin(), dcols.end(), 0.0);
        kernels::matmul_nt_acc(dout, wv.data(), dcols, h * wd, cout, patch);
        kernels::col2im_acc(dcols, h, wd, cin, k, gx->data().subspan(s * in_stride, in_stride));
      }
    }
  });
}

Graph::Var Graph::dense(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (xv.rank() < 1 || wv.rank() != 2 || bv.rank() != 1) throw ShapeError("dense: bad ranks");
  const int n = xv.dim(0);
  const int in = n == 0 ? 0 : static_cast<int>(xv.size() / static_cast<std::size_t>(n));
  const int out_dim = wv.dim(1);
  if (wv.dim(0) != in || bv.dim(0) != out_dim) {
    throw ShapeError("dense: input " + shape_string(xv.shape()) + " vs weights " +
                     shape_string(wv.shape()));
  }
  Tensor out({n, out_dim});
  for (int s = 0; s < n; ++s) {
    std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(s) * out_dim);
  }
  kernels::matmul(xv.data(), wv.data(), out.data(), n, in, out_dim, true);
  return push(std::move(out), [=](Graph& g, Node& self) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    kernels::matmul_tn_acc(xv.data(), self.grad.data(), g.grad_of(w).data(), n, in, out_dim);
    Tensor& gb = g.grad_of(b);
    for (int s = 0; s < n; ++s) {
      for (int j = 0; j < out_dim; ++j) gb[static_cast<std::size_t>(j)] += self.grad[static_cast<std::size_t>(s) * static_cast<std::size_t>(out_dim) + static_cast<std::size_t>(j)];
    }
    if (g.node(x).backprop || g.node(x).param) {
      kernels::matmul_nt_acc(self.grad.data(), wv.data(), g.grad_of(x).data(), n, out_dim, in);
    }
  });
}

Graph::Var Graph::relu(Var x) {
  Tensor out = value(x);
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), [=](Graph& g, Node& self) {
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

Graph::Var Graph::tanh(Var x) {
  Tensor out = value(x);
  for (auto& v : out.data()) v = std::tanh(v);
  return push(std::move(out), [=](Graph& g, Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double t = self.value[i];
      gx[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Graph::Var Graph::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.size() != bv.size()) throw ShapeError("add: size mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), [=](Graph& g, Node& self) {
    for (Var v : {a, b}) {
      Tensor& gv = g.grad_of(v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += self.grad[i];
    }
  });
}

Graph::Var Graph::scale(Var a, double s) {
  Tensor out = value(a);
  for (auto& v : out.data()) v *= s;
  return push(std::move(out), [=](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * self.grad[i];
  });
}

Graph::Var Graph::sum(Var a) {
  const Tensor& av = value(a);
  double total = 0.0;
  for (double v : av.data()) total += v;
  return push(Tensor({}, {total}), [=](Graph& g, Node& self) {
    Tensor& ga = g.grad_of(a);
    for (auto& v : ga.data()) v += self.grad[0];
  });
}

Graph::Var Graph::sum_squares(Var a) {
  const Tensor& av = value(a);
  double total = 0.0;
  for (double v : av.data()) total += v * v;
  return push(Tensor({}, {total}), [=](Graph& g, Node& self) {
    const Tensor& av = g.value(a);
    Tensor& ga = g.grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * av[i] * self.grad[0];
  });
}

Graph::Var Graph::gather(Var x, std::vector<int> idx) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || xv.dim(0) != static_cast<int>(idx.size())) throw ShapeError("gather: bad shapes");
  const int cols = xv.dim(1);
  Tensor out({static_cast<int>(idx.size())});
  for (std::size_t s = 0; s < idx.size(); ++s) {
    if (idx[s] < 0 || idx[s] >= cols) throw ShapeError("gather: index out of range");
    out[s] = xv[s * static_cast<std::size_t>(cols) + static_cast<std::size_t>(idx[s])];
  }
  return push(std::move(out), [=, idx = std::move(idx)](Graph& g, Node& self) {
    Tensor& gx = g.grad_of(x);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      gx[s * static_cast<std::size_t>(cols) + static_cast<std::size_t>(idx[s])] += self.grad[s];
    }
  });
}

namespace {

// Masked log-softmax of one row into `out`.
void masked_log_softmax(std::span<const double> logits, std::span<const double> mask,
                        std::span<double> out) {
  double mx = kMaskedLogit;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = mask[i] != 0.0 ? logits[i] : kMaskedLogit;
    out[i] = z;
    mx = std::max(mx, z);
  }
  double total = 0.0;
  for (double z : out) total += std::exp(z - mx);
  const double lse = mx + std::log(total);
  for (auto& z : out) z -= lse;
}

}  // namespace

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw ShapeError("masked_softmax: size mismatch");
  if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end()) {
    throw std::invalid_argument("masked_softmax: no legal entries");
  }
  std::vector<double> m(mask.begin(), mask.end());
  std::vector<double> out(logits.size());
  masked_log_softmax(logits, m, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? std::exp(out[i]) : 0.0;
  return out;
}

Graph::Var Graph::masked_softmax_cross_entropy(Var logits, const Tensor& target, const Tensor& mask) {
  const Tensor& lv = value(logits);
  if (lv.rank() != 2 || target.shape() != lv.shape() || mask.shape() != lv.shape()) {
    throw ShapeError("cross entropy: logits " + shape_string(lv.shape()) + " target " +
                     shape_string(target.shape()) + " mask " + shape_string(mask.shape()));
  }
  const int n = lv.dim(0);
  const auto a = static_cast<std::size_t>(lv.dim(1));
  auto logp = std::make_shared<std::vector<double>>(lv.size());
  double loss = 0.0;
  for (int s = 0; s < n; ++s) {
    const std::size_t off = static_cast<std::size_t>(s) * a;
    double total = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      const double t = target[off + i];
      if (t < 0.0) throw std::invalid_argument("cross entropy: negative target probability");
      if (t != 0.0 && mask[off + i] == 0.0) {
        throw std::invalid_argument("cross entropy: target puts mass on a masked action");
      }
      total += t;
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("cross entropy: target not normalized");
    auto row = std::span<double>(*logp).subspan(off, a);
    masked_log_softmax(lv.data().subspan(off, a), mask.data().subspan(off, a), row);
    for (std::size_t i = 0; i < a; ++i) {
      if (target[off + i] != 0.0) loss -= target[off + i] * row[i];
    }
  }
  loss /= std::max(n, 1);
  return push(Tensor({}, {loss}), [=, target = target, mask = mask](Graph& g, Node& self) {
    Tensor& gl = g.grad_of(logits);
    const double scale = self.grad[0] / std::max(n, 1);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      if (mask[i] == 0.0) continue;
      gl[i] += scale * (std::exp((*logp)[i]) - target[i]);
    }
  });
}

Graph::Var Graph::mean_squared_error(Var x, const Tensor& target) {
  const Tensor& xv = value(x);
  if (xv.size() != target.size()) throw ShapeError("mse: size mismatch");
  const std::size_t n = xv.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += (xv[i] - target[i]) * (xv[i] - target[i]);
  loss /= static_cast<double>(std::max<std::size_t>(n, 1));
  return push(Tensor({}, {loss}), [=, target = target](Graph& g, Node& self) {
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_of(x);
    const double scale = 2.0 * self.grad[0] / static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < n; ++i) gx[i] += scale * (xv[i] - target[i]);
  });
}

Graph::Var Graph::huber(Var x, const Tensor& target) {
  const Tensor& xv = value(x);
  if (xv.size() != target.size()) throw ShapeError("huber: size mismatch");
  const std::size_t n = xv.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = xv[i] - target[i];
    loss += std::abs(d) <= 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
  }
  loss /= static_cast<double>(std::max<std::size_t>(n, 1));
  return push(Tensor({}, {loss}), [=, target = target](Graph& g, Node& self) {
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_of(x);
    const double scale = self.grad[0] / static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < n; ++i) {
      const double d = xv[i] - target[i];
      gx[i] += scale * std::clamp(d, -1.0, 1.0);
    }
  });
}

void Graph::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward without a recorded graph");
  if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
    throw std::logic_error("backward: loss is not part of the recorded graph");
  }
  if (value(loss).size() != 1) throw std::logic_error("backward: loss must be a scalar");
  grad_of(loss)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backprop) n.backprop(*this, nodes_[static_cast<std::size_t>(i)]);
    if (n.param) {
      Parameter& p = *n.param;
      if (p.grad.size() != p.value.size()) p.grad = Tensor(p.value.shape());
      for (std::size_t j = 0; j < p.grad.size(); ++j) p.grad[j] += n.grad[j];
      p.has_grad = true;
    }
  }
  nodes_.clear();
}

}  // namespace satgame
