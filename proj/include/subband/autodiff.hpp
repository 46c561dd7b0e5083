#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace subband {
class InterferenceGraph;
}

namespace subband::ad {

/// Cache-line aligned storage, so vectorized reductions take the same path
/// for equal shapes whichever thread allocated the buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major matrix of doubles. Vectors are 1 x n.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);
  Tensor(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  Eigen::Map<RowMatrix> matrix() { return {data_.data(), rows_, cols_}; }
  Eigen::Map<const RowMatrix> matrix() const { return {data_.data(), rows_, cols_}; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double, AlignedAllocator<double>> data_;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

/// Compressed neighbour lists (CSR). Row n lists the nodes whose rows are
/// summed into node n by scatter_sum.
struct Neighborhood {
  int n_nodes = 0;
  std::vector<int> offsets{0};
  std::vector<int> indices;

  static Neighborhood from_graph(const InterferenceGraph& g);
  /// Disjoint union; node ids of graph i are shifted by the sizes of the
  /// graphs before it.
  static Neighborhood disjoint_union(std::span<const InterferenceGraph* const> graphs);

  int degree(int n) const { return offsets[n + 1] - offsets[n]; }
};

class Var {
 public:
  Var() = default;
  bool valid() const { return id_ >= 0; }
  int id() const { return id_; }

 private:
  friend class Tape;
  explicit Var(int id) : id_(id) {}
  int id_ = -1;
};

/// Records operations for reverse-mode differentiation.
///
/// Every op checks shapes (kShapeMismatch) and that its output is finite
/// (kNonFiniteValue). With record_gradients = false the tape only evaluates,
/// which is what inference uses.
class Tape {
 public:
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}

  Var constant(Tensor value);
  /// Leaf bound to `p`; backward() accumulates into p.grad. The tape keeps a
  /// reference to p.value, so `p` must outlive the tape.
  Var parameter(Parameter& p);
  /// Read-only leaf; receives no gradient.
  Var parameter(const Parameter& p);
  /// Differentiable leaf over a read-only parameter; its gradient is only
  /// available through grad().
  Var watch(const Parameter& p);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var x, Var bias);  // bias (1 x cols) added to every row
  Var hadamard(Var a, Var b);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax_rows(Var a);
  /// out[n] = sum of x[m] over m in nb row n. The summation order is fixed by
  /// the values of the rows, not their labels, so relabelling nodes permutes
  /// the output exactly.
  Var scatter_sum(Var x, const Neighborhood& nb);
  Var sum(Var a);  // 1 x 1
  Var scale(Var a, double s);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() target with respect to v (zeros if v
  /// did not take part).
  Tensor grad(Var v) const;

  /// Reverse sweep from a 1 x 1 loss. Throws kDisconnectedGraph when the loss
  /// does not depend on any parameter.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kConstant, kParameter, kMatmul, kMatmulNt, kAdd, kSub, kAddRow, kHadamard,
    kOneMinus, kSigmoid, kTanh, kSoftmaxRows, kScatterSum, kSum, kScale,
  };
  struct Node {
    Op op;
    Tensor value;
    const Tensor* ref = nullptr;  // external value (parameter leaves)
    Tensor grad;
    int a = -1;
    int b = -1;
    bool requires_grad = false;
    Parameter* param = nullptr;
    const Neighborhood* nb = nullptr;
    double scalar = 0.0;

    const Tensor& v() const { return ref ? *ref : value; }
  };

  const Node& node(Var v) const;
  Var push(Op op, Tensor value, int a, int b, const char* name);
  void accumulate(int id, const Tensor& g);
  Tensor& grad_slot(int id);

  bool record_;
  std::vector<Node> nodes_;
};

/// Sums the rows of x listed in `nb` for every node, in value order.
void scatter_sum_into(const Tensor& x, const Neighborhood& nb, Tensor& out);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update of every parameter from its grad.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace subband::ad
