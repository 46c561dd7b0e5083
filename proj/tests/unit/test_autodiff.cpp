#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "../oracles.hpp"
#include "subband/autodiff.hpp"
#include "subband/error.hpp"
#include "subband/graph.hpp"

using namespace subband;
using namespace subband::ad;

namespace {

Tensor random_tensor(int r, int c, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Scalarizes an op by weighting its output with a fixed random matrix and
// compares the tape gradient of every input with central differences.
using OpFn = std::function<Var(Tape&, const std::vector<Var>&)>;

double max_gradient_error(std::vector<Parameter>& inputs, const OpFn& op, std::mt19937_64& rng) {
  Tensor weights;
  auto loss = [&](Tape& tape, bool with_grad) {
    std::vector<Var> vars;
    for (auto& p : inputs) vars.push_back(with_grad ? tape.parameter(p) : tape.constant(p.value));
    Var out = op(tape, vars);
    if (weights.size() == 0) weights = random_tensor(tape.value(out).rows(), tape.value(out).cols(), rng);
    return tape.sum(tape.hadamard(out, tape.constant(weights)));
  };
  for (auto& p : inputs) p.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape, true));
  }
  double worst = 0.0;
  for (auto& p : inputs) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      auto f = [&](const std::vector<double>& x) {
        const double saved = p.value.values()[i];
        p.value.values()[i] = x[0];
        Tape tape(false);
        const double v = tape.value(loss(tape, false))(0, 0);
        p.value.values()[i] = saved;
        return v;
      };
      const double fd = oracle::central_difference(f, {p.value.values()[i]}, 0, 1e-5);
      worst = std::max(worst, oracle::relative_error(p.grad.values()[i], fd));
    }
  }
  return worst;
}

struct OpCase {
  const char* name;
  std::function<std::vector<std::pair<int, int>>(std::mt19937_64&)> shapes;
  OpFn op;
};

int dim(std::mt19937_64& rng) { return 1 + static_cast<int>(rng() % 5); }

}  // namespace

TEST_CASE("every op matches central differences") {
  InterferenceGraph g = InterferenceGraph::from_edges(5, 3, {{0, 1}, {1, 2}, {2, 0}, {3, 4}});
  const Neighborhood nb = Neighborhood::from_graph(g);

  const std::vector<OpCase> cases = {
      {"matmul", [](auto& r) { int a = dim(r), b = dim(r), c = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {b, c}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); }},
      {"matmul_nt", [](auto& r) { int a = dim(r), b = dim(r), c = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {c, b}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.matmul_nt(v[0], v[1]); }},
      {"add", [](auto& r) { int a = dim(r), b = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {a, b}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); }},
      {"sub", [](auto& r) { int a = dim(r), b = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {a, b}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.sub(v[0], v[1]); }},
      {"add_row", [](auto& r) { int a = dim(r), b = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {1, b}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.add_row(v[0], v[1]); }},
      {"hadamard", [](auto& r) { int a = dim(r), b = dim(r); return std::vector<std::pair<int, int>>{{a, b}, {a, b}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.hadamard(v[0], v[1]); }},
      {"one_minus", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.one_minus(v[0]); }},
      {"sigmoid", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.sigmoid(v[0]); }},
      {"tanh", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.tanh(v[0]); }},
      {"softmax_rows", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), 1 + dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.softmax_rows(v[0]); }},
      {"scatter_sum", [](auto& r) { return std::vector<std::pair<int, int>>{{5, dim(r)}}; },
       [&nb](Tape& t, const std::vector<Var>& v) { return t.scatter_sum(v[0], nb); }},
      {"sum", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.sum(v[0]); }},
      {"scale", [](auto& r) { return std::vector<std::pair<int, int>>{{dim(r), dim(r)}}; },
       [](Tape& t, const std::vector<Var>& v) { return t.scale(v[0], -1.7); }},
  };

  std::mt19937_64 rng(2024);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Parameter> inputs;
      for (auto [r, k] : c.shapes(rng)) inputs.emplace_back("x", random_tensor(r, k, rng));
      worst = std::max(worst, max_gradient_error(inputs, c.op, rng));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("softmax then dot matches central differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Parameter> in;
    in.emplace_back("a", random_tensor(4, 5, rng));
    in.emplace_back("b", random_tensor(4, 5, rng));
    const double err = max_gradient_error(
        in, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.hadamard(t.softmax_rows(v[0]), v[1])); },
        rng);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("forward values") {
  Tape t;
  SUBCASE("zero row softmax is uniform") {
    const auto& s = t.value(t.softmax_rows(t.constant(Tensor(2, 5))));
    for (double v : s.values()) CHECK(v == doctest::Approx(0.2));
  }
  SUBCASE("empty neighbourhood sums to zero") {
    const auto g = InterferenceGraph::from_edges(3, 2, {{0, 1}});
    const auto nb = Neighborhood::from_graph(g);
    const auto& s = t.value(t.scatter_sum(t.constant(Tensor(3, 2, 4.0)), nb));
    CHECK(s(2, 0) == 0.0);
    CHECK(s(2, 1) == 0.0);
    CHECK(s(0, 0) == 4.0);
  }
  SUBCASE("matmul by hand") {
    const Var a = t.constant(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
    const Var b = t.constant(Tensor(3, 2, {7, 8, 9, 10, 11, 12}));
    const auto& c = t.value(t.matmul(a, b));
    CHECK(c(0, 0) == 58);
    CHECK(c(0, 1) == 64);
    CHECK(c(1, 0) == 139);
    CHECK(c(1, 1) == 154);
    const auto& d = t.value(t.matmul_nt(a, a));
    CHECK(d(0, 1) == 32);
  }
}

TEST_CASE("scalar product rule") {
  Parameter x("x", Tensor(1, 1, 3.0));
  Parameter y("y", Tensor(1, 1, -2.5));
  Tape t;
  t.backward(t.sum(t.hadamard(t.parameter(x), t.parameter(y))));
  CHECK(x.grad(0, 0) == -2.5);
  CHECK(y.grad(0, 0) == 3.0);
}

TEST_CASE("unused parameters get zero gradient; watch leaves expose grad()") {
  Parameter used("u", Tensor(2, 2, 1.0));
  Parameter unused("n", Tensor(2, 2, 1.0));
  Tape t;
  const Var u = t.parameter(used);
  const Var n = t.parameter(unused);
  (void)n;
  t.backward(t.sum(t.scale(u, 2.0)));
  for (double v : unused.grad.values()) CHECK(v == 0.0);
  for (double v : used.grad.values()) CHECK(v == 2.0);

  const Parameter frozen("f", Tensor(1, 3, 0.5));
  Tape w;
  const Var f = w.watch(frozen);
  w.backward(w.sum(w.hadamard(f, f)));
  const Tensor gf = w.grad(f);
  CHECK(gf.size() == 3);
  for (double v : gf.values()) CHECK(v == 1.0);
}

TEST_CASE("empty edge set gives zero loss and zero gradients") {
  const auto g = InterferenceGraph::from_edges(4, 3, {});
  const auto nb = Neighborhood::from_graph(g);
  Parameter theta("theta", Tensor(4, 3, 0.3));
  Tape t;
  const Var th = t.parameter(theta);
  const Var loss = t.scale(t.sum(t.hadamard(th, t.scatter_sum(th, nb))), 0.5);
  CHECK(t.value(loss)(0, 0) == 0.0);
  t.backward(loss);
  for (double v : theta.grad.values()) CHECK(v == 0.0);
}

TEST_CASE("errors") {
  Tape t;
  CHECK_THROWS_AS(t.matmul(t.constant(Tensor(2, 3)), t.constant(Tensor(2, 3))), Error);
  try {
    t.add(t.constant(Tensor(2, 3)), t.constant(Tensor(3, 2)));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
  try {
    t.scale(t.constant(Tensor(1, 1, 1e308)), 10.0);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteValue);
  }
  try {
    Tape c;
    c.backward(c.sum(c.constant(Tensor(2, 2, 1.0))));
    FAIL("expected DisconnectedGraph");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDisconnectedGraph);
  }
  CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1.0}), Error);
}

TEST_CASE("scatter backward is scatter on the transposed neighbourhood") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 15);
    // directed neighbourhood: A(r, m) = 1 if m is listed in row r
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Neighborhood nb;
    nb.n_nodes = n;
    for (int r = 0; r < n; ++r) {
      for (int m = 0; m < n; ++m)
        if (m != r && rng() % 3 == 0) {
          nb.indices.push_back(m);
          a(r, m) = 1.0;
        }
      nb.offsets.push_back(static_cast<int>(nb.indices.size()));
    }
    const int cols = 1 + static_cast<int>(rng() % 4);
    Parameter x("x", random_tensor(n, cols, rng));
    const Tensor w = random_tensor(n, cols, rng);
    Tape t;
    t.backward(t.sum(t.hadamard(t.scatter_sum(t.parameter(x), nb), t.constant(w))));
    const Eigen::MatrixXd expected = a.transpose() * Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(w.values().data(), n, cols);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < cols; ++c) CHECK(x.grad(r, c) == doctest::Approx(expected(r, c)).epsilon(1e-12));
  }
}

TEST_CASE("scatter output permutes exactly under relabelling") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 12;
    const auto edges = oracle::random_edges(n, 0.4, rng);
    const auto g = InterferenceGraph::from_edges(n, 3, edges);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto h = g.permuted(perm);
    const Tensor x = random_tensor(n, 8, rng, -1e3, 1e3);
    Tensor y(n, 8);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 8; ++c) y(perm[i], c) = x(i, c);
    Tensor sx, sy;
    scatter_sum_into(x, Neighborhood::from_graph(g), sx);
    scatter_sum_into(y, Neighborhood::from_graph(h), sy);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 8; ++c) CHECK(sy(perm[i], c) == sx(i, c));
  }
}

TEST_CASE("Adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Parameter p("p", Tensor(2, 2, 0.7));
    Parameter* ps[] = {&p};
    AdamState s;
    for (int i = 0; i < 5; ++i) adam_step(ps, s);
    for (double v : p.value.values()) CHECK(v == 0.7);
  }
  SUBCASE("first step moves by the learning rate against the gradient sign") {
    Parameter p("p", Tensor(1, 4, {0.0, 1.0, -1.0, 2.0}));
    p.grad = Tensor(1, 4, {3.0, -0.01, 250.0, -7.0});
    Parameter* ps[] = {&p};
    AdamState s;
    s.learning_rate = 1e-3;
    adam_step(ps, s);
    const double expected[] = {-1e-3, 1.0 + 1e-3, -1.0 - 1e-3, 2.0 + 1e-3};
    for (int i = 0; i < 4; ++i) CHECK(p.value(0, i) == doctest::Approx(expected[i]).epsilon(1e-6));
  }
  SUBCASE("deterministic over 100 steps") {
    auto run = [] {
      std::mt19937_64 rng(1);
      Parameter p("p", random_tensor(3, 3, rng));
      Parameter* ps[] = {&p};
      AdamState s;
      for (int i = 0; i < 100; ++i) {
        Tape t;
        const Var v = t.parameter(p);
        p.zero_grad();
        t.backward(t.sum(t.hadamard(t.tanh(v), v)));
        adam_step(ps, s);
      }
      return p.value;
    };
    const Tensor a = run(), b = run();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == b.values()[i]);
  }
}
