#include "subband/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "subband/error.hpp"
#include "subband/graph.hpp"

namespace subband::ad {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw Error(ErrorCode::kShapeMismatch, "tensor: negative shape");
}

Tensor::Tensor(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(values.begin(), values.end()) {
  if (rows < 0 || cols < 0 ||
      data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw Error(ErrorCode::kShapeMismatch, "tensor: value count does not match shape");
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// --- neighbourhoods --------------------------------------------------------

Neighborhood Neighborhood::from_graph(const InterferenceGraph& g) {
  const InterferenceGraph* one[] = {&g};
  return disjoint_union(one);
}

Neighborhood Neighborhood::disjoint_union(std::span<const InterferenceGraph* const> graphs) {
  Neighborhood nb;
  int base = 0;
  for (const InterferenceGraph* g : graphs) {
    for (int n = 0; n < g->n_nodes(); ++n) {
      for (int m : g->neighbors(n)) nb.indices.push_back(base + m);
      nb.offsets.push_back(static_cast<int>(nb.indices.size()));
    }
    base += g->n_nodes();
  }
  nb.n_nodes = base;
  return nb;
}

void scatter_sum_into(const Tensor& x, const Neighborhood& nb, Tensor& out) {
  out = Tensor(nb.n_nodes, x.cols());
  const int cols = x.cols();
  std::vector<const double*> rows;
  for (int n = 0; n < nb.n_nodes; ++n) {
    rows.clear();
    for (int i = nb.offsets[n]; i < nb.offsets[n + 1]; ++i) rows.push_back(x.row(nb.indices[i]));
    std::sort(rows.begin(), rows.end(), [cols](const double* a, const double* b) {
      return std::lexicographical_compare(a, a + cols, b, b + cols);
    });
    double* o = out.row(n);
    for (const double* r : rows)
      for (int c = 0; c < cols; ++c) o[c] += r[c];
  }
}

// --- tape ------------------------------------------------------------------

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                  std::to_string(b.cols()));
}

// out(n, c) = sum_i x(n, i) * yt(i, c) accumulated in ascending i. Each
// output row depends only on its own input row, so relabelling nodes moves
// rows without changing a bit; blocked GEMM does not guarantee that.
void row_product(const Tensor& x, const double* yt, int out_cols, Tensor& out) {
  const int d = x.cols();
  int r = 0;
  for (; r + 4 <= x.rows(); r += 4) {
    double* o0 = out.row(r);
    double* o1 = out.row(r + 1);
    double* o2 = out.row(r + 2);
    double* o3 = out.row(r + 3);
    const double* x0 = x.row(r);
    const double* x1 = x.row(r + 1);
    const double* x2 = x.row(r + 2);
    const double* x3 = x.row(r + 3);
    for (int i = 0; i < d; ++i) {
      const double a0 = x0[i], a1 = x1[i], a2 = x2[i], a3 = x3[i];
      const double* w = yt + static_cast<std::size_t>(i) * out_cols;
      for (int c = 0; c < out_cols; ++c) {
        o0[c] += a0 * w[c];
        o1[c] += a1 * w[c];
        o2[c] += a2 * w[c];
        o3[c] += a3 * w[c];
      }
    }
  }
  for (; r < x.rows(); ++r) {
    double* o = out.row(r);
    const double* xr = x.row(r);
    for (int i = 0; i < d; ++i) {
      const double a = xr[i];
      const double* w = yt + static_cast<std::size_t>(i) * out_cols;
      for (int c = 0; c < out_cols; ++c) o[c] += a * w[c];
    }
  }
}

double sigmoid_scalar(double x) {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.id_ < 0 || v.id_ >= static_cast<int>(nodes_.size()))
    throw Error(ErrorCode::kInvalidArgument, "tape: variable does not belong to this tape");
  return nodes_[v.id_];
}

Var Tape::push(Op op, Tensor value, int a, int b, const char* name) {
  if (!value.all_finite())
    throw Error(ErrorCode::kNonFiniteValue, std::string(name) + ": produced a non-finite value");
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.a = a;
  n.b = b;
  if (record_) {
    n.requires_grad = (a >= 0 && nodes_[a].requires_grad) || (b >= 0 && nodes_[b].requires_grad);
  }
  nodes_.push_back(std::move(n));
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor value) { return push(Op::kConstant, std::move(value), -1, -1, "constant"); }

Var Tape::parameter(Parameter& p) {
  Var v = parameter(static_cast<const Parameter&>(p));
  nodes_[v.id_].param = &p;
  nodes_[v.id_].requires_grad = record_;
  return v;
}

Var Tape::parameter(const Parameter& p) {
  if (!p.value.all_finite())
    throw Error(ErrorCode::kNonFiniteValue, "parameter " + p.name + " is not finite");
  Node n;
  n.op = Op::kParameter;
  n.ref = &p.value;
  nodes_.push_back(std::move(n));
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::watch(const Parameter& p) {
  Var v = parameter(p);
  nodes_[v.id_].requires_grad = record_;
  return v;
}

const Tensor& Tape::value(Var v) const { return node(v).v(); }

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) return Tensor(n.v().rows(), n.v().cols());
  return n.grad;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.cols() != y.rows()) shape_error("matmul", x, y);
  Tensor out(x.rows(), y.cols());
  row_product(x, y.values().data(), y.cols(), out);
  return push(Op::kMatmul, std::move(out), a.id_, b.id_, "matmul");
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.cols() != y.cols()) shape_error("matmul_nt", x, y);
  Tensor out(x.rows(), y.rows());
  Tensor yt(y.cols(), y.rows());
  yt.matrix() = y.matrix().transpose();
  row_product(x, yt.values().data(), y.rows(), out);
  return push(Op::kMatmulNt, std::move(out), a.id_, b.id_, "matmul_nt");
}

Var Tape::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (!x.same_shape(y)) shape_error("add", x, y);
  Tensor out(x.rows(), x.cols());
  out.matrix() = x.matrix() + y.matrix();
  return push(Op::kAdd, std::move(out), a.id_, b.id_, "add");
}

Var Tape::sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (!x.same_shape(y)) shape_error("sub", x, y);
  Tensor out(x.rows(), x.cols());
  out.matrix() = x.matrix() - y.matrix();
  return push(Op::kSub, std::move(out), a.id_, b.id_, "sub");
}

Var Tape::add_row(Var a, Var bias) {
  const Tensor& x = value(a);
  const Tensor& b = value(bias);
  if (b.rows() != 1 || b.cols() != x.cols()) shape_error("add_row", x, b);
  Tensor out(x.rows(), x.cols());
  out.matrix() = x.matrix().rowwise() + b.matrix().row(0);
  return push(Op::kAddRow, std::move(out), a.id_, bias.id_, "add_row");
}

Var Tape::hadamard(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (!x.same_shape(y)) shape_error("hadamard", x, y);
  Tensor out(x.rows(), x.cols());
  out.matrix() = x.matrix().cwiseProduct(y.matrix());
  return push(Op::kHadamard, std::move(out), a.id_, b.id_, "hadamard");
}

Var Tape::one_minus(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), x.cols());
  out.matrix() = (1.0 - x.matrix().array()).matrix();
  return push(Op::kOneMinus, std::move(out), a.id_, -1, "one_minus");
}

Var Tape::sigmoid(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), x.cols());
  auto in = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = sigmoid_scalar(in[i]);
  return push(Op::kSigmoid, std::move(out), a.id_, -1, "sigmoid");
}

Var Tape::tanh(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), x.cols());
  auto in = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = std::tanh(in[i]);
  return push(Op::kTanh, std::move(out), a.id_, -1, "tanh");
}

Var Tape::softmax_rows(Var a) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    const double* in = x.row(r);
    double* o = out.row(r);
    const double mx = x.cols() > 0 ? *std::max_element(in, in + x.cols()) : 0.0;
    double total = 0.0;
    for (int c = 0; c < x.cols(); ++c) total += (o[c] = std::exp(in[c] - mx));
    for (int c = 0; c < x.cols(); ++c) o[c] /= total;
  }
  return push(Op::kSoftmaxRows, std::move(out), a.id_, -1, "softmax_rows");
}

Var Tape::scatter_sum(Var a, const Neighborhood& nb) {
  const Tensor& x = value(a);
  if (x.rows() != nb.n_nodes)
    throw Error(ErrorCode::kShapeMismatch,
                "scatter_sum: " + std::to_string(x.rows()) + " rows for " +
                    std::to_string(nb.n_nodes) + " nodes");
  Tensor out;
  scatter_sum_into(x, nb, out);
  Var v = push(Op::kScatterSum, std::move(out), a.id_, -1, "scatter_sum");
  nodes_[v.id_].nb = &nb;
  return v;
}

Var Tape::sum(Var a) {
  const Tensor& x = value(a);
  Tensor out(1, 1, x.matrix().sum());
  return push(Op::kSum, std::move(out), a.id_, -1, "sum");
}

Var Tape::scale(Var a, double s) {
  const Tensor& x = value(a);
  Tensor out(x.rows(), x.cols());
  out.matrix() = x.matrix() * s;
  Var v = push(Op::kScale, std::move(out), a.id_, -1, "scale");
  nodes_[v.id_].scalar = s;
  return v;
}

Tensor& Tape::grad_slot(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0 && n.v().size() != 0) n.grad = Tensor(n.v().rows(), n.v().cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!record_)
    throw Error(ErrorCode::kInvalidArgument, "backward: tape was created without gradients");
  const Node& root = node(loss);
  if (root.v().rows() != 1 || root.v().cols() != 1)
    throw Error(ErrorCode::kShapeMismatch, "backward: loss must be a 1x1 scalar");
  if (!root.requires_grad)
    throw Error(ErrorCode::kDisconnectedGraph, "backward: loss does not depend on any parameter");

  for (Node& n : nodes_) n.grad = Tensor();
  grad_slot(loss.id_).fill(1.0);

  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const Tensor& g = n.grad;
    const bool ga = n.a >= 0 && nodes_[n.a].requires_grad;
    const bool gb = n.b >= 0 && nodes_[n.b].requires_grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParameter:
        if (n.param) n.param->grad.matrix() += g.matrix();
        break;
      case Op::kMatmul:
        if (ga) grad_slot(n.a).matrix().noalias() += g.matrix() * nodes_[n.b].v().matrix().transpose();
        if (gb) grad_slot(n.b).matrix().noalias() += nodes_[n.a].v().matrix().transpose() * g.matrix();
        break;
      case Op::kMatmulNt:
        if (ga) grad_slot(n.a).matrix().noalias() += g.matrix() * nodes_[n.b].v().matrix();
        if (gb) grad_slot(n.b).matrix().noalias() += g.matrix().transpose() * nodes_[n.a].v().matrix();
        break;
      case Op::kAdd:
        if (ga) grad_slot(n.a).matrix() += g.matrix();
        if (gb) grad_slot(n.b).matrix() += g.matrix();
        break;
      case Op::kSub:
        if (ga) grad_slot(n.a).matrix() += g.matrix();
        if (gb) grad_slot(n.b).matrix() -= g.matrix();
        break;
      case Op::kAddRow:
        if (ga) grad_slot(n.a).matrix() += g.matrix();
        if (gb) grad_slot(n.b).matrix() += g.matrix().colwise().sum();
        break;
      case Op::kHadamard:
        if (ga) grad_slot(n.a).matrix() += g.matrix().cwiseProduct(nodes_[n.b].v().matrix());
        if (gb) grad_slot(n.b).matrix() += g.matrix().cwiseProduct(nodes_[n.a].v().matrix());
        break;
      case Op::kOneMinus:
        if (ga) grad_slot(n.a).matrix() -= g.matrix();
        break;
      case Op::kSigmoid:
        if (ga) {
          const auto y = n.value.matrix().array();
          grad_slot(n.a).matrix().array() += g.matrix().array() * y * (1.0 - y);
        }
        break;
      case Op::kTanh:
        if (ga) {
          const auto y = n.value.matrix().array();
          grad_slot(n.a).matrix().array() += g.matrix().array() * (1.0 - y * y);
        }
        break;
      case Op::kSoftmaxRows:
        if (ga) {
          Tensor& dst = grad_slot(n.a);
          for (int r = 0; r < g.rows(); ++r) {
            const double* y = n.value.row(r);
            const double* gy = g.row(r);
            double dot = 0.0;
            for (int c = 0; c < g.cols(); ++c) dot += gy[c] * y[c];
            double* d = dst.row(r);
            for (int c = 0; c < g.cols(); ++c) d[c] += y[c] * (gy[c] - dot);
          }
        }
        break;
      case Op::kScatterSum:
        if (ga) {
          // Adjoint: each listed source row receives the target's gradient.
          Tensor& dst = grad_slot(n.a);
          const Neighborhood& nb = *n.nb;
          const int cols = g.cols();
          for (int t = 0; t < nb.n_nodes; ++t) {
            const double* gt = g.row(t);
            for (int i = nb.offsets[t]; i < nb.offsets[t + 1]; ++i) {
              double* d = dst.row(nb.indices[i]);
              for (int c = 0; c < cols; ++c) d[c] += gt[c];
            }
          }
        }
        break;
      case Op::kSum:
        if (ga) grad_slot(n.a).matrix().array() += g(0, 0);
        break;
      case Op::kScale:
        if (ga) grad_slot(n.a).matrix() += n.scalar * g.matrix();
        break;
    }
  }
}

// --- optimizer -------------------------------------------------------------

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols());
      state.second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.first_moment.size() != params.size())
    throw Error(ErrorCode::kShapeMismatch, "adam: parameter count changed between steps");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.grad.same_shape(p.value) || !state.first_moment[i].same_shape(p.value))
      throw Error(ErrorCode::kShapeMismatch, "adam: shape mismatch for " + p.name);
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace subband::ad
