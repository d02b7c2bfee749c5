// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "shadowgrid/error.hpp"
#include "shadowgrid/numerics/adam.hpp"
#include "shadowgrid/numerics/ops.hpp"
#include "support.hpp"

using namespace shadowgrid;
using namespace shadowgrid::numerics;
using shadowgrid::testing::central_difference;
using shadowgrid::testing::random_tensor;
using shadowgrid::testing::relative_error;

namespace {

using Graph = std::function<Var(Tape&, std::vector<Var>&)>;

/// Worst relative error between tape gradients and central differences of
/// sum(f(inputs) * R) for a fixed random R.
double gradient_check(std::vector<Tensor> inputs, const Graph& f, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  Tensor weights;
  auto loss_of = [&](Tape& tape, std::vector<Var>& vars) {
    const Var out = f(tape, vars);
    if (weights.size() == 0) weights = random_tensor(out.value().shape(), rng, 0.5, 1.5);
    return sum(mul(out, tape.constant(weights)));
  };
  Tape tape;
  std::vector<Var> vars;
  for (auto& t : inputs) vars.push_back(tape.variable(t));
  const Var loss = loss_of(tape, vars);
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = tape.grad_view(vars[k].id()).size() ? tape.grad_view(vars[k].id())
                                                                  : Tensor(inputs[k].shape(), 0.0);
    for (Index i = 0; i < inputs[k].size(); ++i) {
      const double numeric = central_difference(inputs[k], i, [&] {
        Tape t2;
        std::vector<Var> v2;
        for (auto& in : inputs) v2.push_back(t2.variable(in));
        return loss_of(t2, v2).item();
      });
      worst = std::max(worst, relative_error(analytic[i], numeric));
    }
  }
  return worst;
}

void check_kind(ErrorKind kind, const std::function<void()>& body) {
  try {
    body();
    FAIL("expected error " << to_string(kind));
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

}  // namespace

TEST_CASE("matmul examples") {
  Tape tape;
  const Var m = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
  const Var id = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  CHECK((matmul(id, m).value().flat() == m.value().flat()));
  const Var c = matmul(m, tape.constant(Tensor({2, 1}, {5, 6})));
  CHECK(c.value().shape() == Shape{2, 1});
  CHECK(c.value()[0] == 17.0);
  CHECK(c.value()[1] == 39.0);
  check_kind(ErrorKind::ShapeMismatch,
             [&] { matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({4, 2}))); });
}

TEST_CASE("elementwise examples") {
  Tape tape;
  const Var r = relu(tape.constant(Tensor({3}, {-1, 0, 2})));
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 0.0);
  CHECK(r.value()[2] == 2.0);
  CHECK(sigmoid(tape.constant(Tensor::scalar(0.0))).item() == 0.5);
  check_kind(ErrorKind::ShapeMismatch, [&] { add(tape.constant(Tensor({2})), tape.constant(Tensor({3}))); });

  const Var x = tape.variable(Tensor::scalar(3.0));
  const Var y = tape.variable(Tensor::scalar(5.0));
  tape.backward(mul(x, y));
  CHECK(x.grad()[0] == 5.0);
  CHECK(y.grad()[0] == 3.0);

  Tensor xs = Tensor::scalar(3.0);
  const double fd = central_difference(xs, 0, [&] { return xs[0] * 5.0; });
  CHECK(relative_error(5.0, fd) < 1e-8);
}

TEST_CASE("softplus is stable for large magnitudes") {
  Tape tape;
  const Var s = softplus(tape.constant(Tensor({3}, {-800.0, 0.0, 800.0})));
  CHECK(s.value()[0] >= 0.0);
  CHECK(s.value()[0] < 1e-300);
  CHECK(s.value()[1] == doctest::Approx(std::log(2.0)));
  CHECK(s.value()[2] == 800.0);
}

TEST_CASE("temporal convolution examples") {
  Tape tape;
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({2, 4, 3}, rng);
  Tensor eye({1, 3, 3}, 0.0);
  for (Index c = 0; c < 3; ++c) eye[c * 3 + c] = 1.0;
  const Var same = temporal_conv1d(tape.constant(x), tape.constant(eye));
  CHECK(same.value().shape() == x.shape());
  CHECK((same.value().flat() == x.flat()));

  const Var y = temporal_conv1d(tape.constant(Tensor({1, 3, 1}, {1, 2, 3})), tape.constant(Tensor({2, 1, 1}, {1, 1})));
  CHECK(y.value().shape() == Shape{1, 2, 1});
  CHECK(y.value()[0] == 3.0);
  CHECK(y.value()[1] == 5.0);

  check_kind(ErrorKind::WindowTooShort,
             [&] { temporal_conv1d(tape.constant(Tensor({1, 2, 1})), tape.constant(Tensor({3, 1, 1}))); });
}

TEST_CASE("glu examples") {
  Tape tape;
  const Var a = glu(tape.constant(Tensor({1, 2}, {2.0, 0.0})));
  CHECK(a.value().shape() == Shape{1, 1});
  CHECK(a.value()[0] == 1.0);
  const Var b = glu(tape.constant(Tensor({2, 4}, {1, -3, 0, 0, 4, 5, 0, 0})));
  CHECK(b.value()[0] == 0.5);
  CHECK(b.value()[1] == -1.5);
  CHECK(b.value()[2] == 2.0);
  CHECK(b.value()[3] == 2.5);
  const Var c = glu(tape.constant(Tensor({1, 2}, {7.0, 50.0})));
  CHECK(c.value()[0] == doctest::Approx(7.0).epsilon(1e-12));
  check_kind(ErrorKind::OddChannels, [&] { glu(tape.constant(Tensor({1, 3}))); });
}

TEST_CASE("backward basics") {
  Tape tape;
  const Var x = tape.variable(Tensor::scalar(3.0));
  tape.backward(mul(x, x));
  CHECK(x.grad()[0] == 6.0);
  check_kind(ErrorKind::NonScalarLoss, [&] { tape.backward(tape.variable(Tensor({2}))); });
}

TEST_CASE("sum(relu(Wx)) matches finite differences") {
  std::mt19937_64 rng(9);
  ParameterSet params;
  params.add("w", random_tensor({4, 3}, rng));
  const Tensor x = random_tensor({3, 1}, rng);
  auto forward = [&](Tape& tape) { return sum(relu(matmul(tape.parameter(params.get("w")), tape.constant(x)))); };
  {
    Tape tape;
    params.zero_grad();
    tape.backward(forward(tape));
  }
  const double worst = testing::worst_parameter_error(params, [&] {
    Tape tape;
    return forward(tape).item();
  });
  CHECK(worst < 1e-5);
}

TEST_CASE("repeated backward accumulates exactly") {
  ParameterSet params;
  params.add("w", Tensor({2}, {1.5, -0.5}));
  Tape tape;
  const Var w = tape.parameter(params.get("w"));
  const Var loss = sum(mul(w, w));
  params.zero_grad();
  tape.backward(loss);
  const Tensor once = params.get("w").grad;
  tape.backward(loss);
  CHECK(params.get("w").grad[0] == 2.0 * once[0]);
  CHECK(params.get("w").grad[1] == 2.0 * once[1]);
  // Node gradients are recomputed, not accumulated.
  CHECK(w.grad()[0] == once[0]);
}

TEST_CASE("gradient check across every op") {
  std::mt19937_64 rng(21);
  auto R = [&](Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(s), rng, lo, hi); };
  // Keep relu/abs kinks away from zero so central differences stay on one side.
  auto away = [&](Shape s) {
    Tensor t = R(std::move(s));
    for (Index i = 0; i < t.size(); ++i) t[i] += t[i] >= 0 ? 0.1 : -0.1;
    return t;
  };

  CHECK(gradient_check({R({3, 4}), R({4, 2})}, [](Tape&, auto& v) { return matmul(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({R({2, 3, 4}), R({4, 5})}, [](Tape&, auto& v) { return linear(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({R({2, 3, 4}), R({4})}, [](Tape&, auto& v) { return add_bias(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({away({3, 4})}, [](Tape&, auto& v) { return relu(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}, -4, 4)}, [](Tape&, auto& v) { return sigmoid(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}, -3, 3)}, [](Tape&, auto& v) { return tanh(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}, -5, 5)}, [](Tape&, auto& v) { return softplus(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}), R({3, 4})}, [](Tape&, auto& v) { return add(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}), R({3, 4})}, [](Tape&, auto& v) { return sub(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}), R({3, 4})}, [](Tape&, auto& v) { return mul(v[0], v[1]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4})}, [](Tape&, auto& v) { return affine(v[0], -2.5, 0.75); }) < 1e-5);
  CHECK(gradient_check({R({3, 4})}, [](Tape&, auto& v) { return reshape(v[0], {2, 6}); }) < 1e-5);
  CHECK(gradient_check({R({2, 3, 2}), R({2, 3, 3})},
                       [](Tape&, auto& v) { return concat_last(std::vector<Var>{v[0], v[1]}); }) < 1e-5);
  CHECK(gradient_check({R({2, 3, 5})}, [](Tape&, auto& v) { return slice_last(v[0], 1, 3); }) < 1e-5);
  CHECK(gradient_check({R({2, 4, 3})}, [](Tape&, auto& v) { return select_step(v[0], 2); }) < 1e-5);
  CHECK(gradient_check({R({5, 3})}, [](Tape&, auto& v) { return gather_rows(v[0], {4, 0, 4, 2}); }) < 1e-5);
  CHECK(gradient_check({R({2, 6, 3}), R({3, 3, 4})}, [](Tape&, auto& v) { return temporal_conv1d(v[0], v[1]); }) <
        1e-5);
  CHECK(gradient_check({R({3, 6}, -3, 3)}, [](Tape&, auto& v) { return glu(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({6})},
                       [](Tape&, auto& v) { return scatter_square(v[0], 2, 3, {0, 1, 2}, {1, 2, 0}); }) < 1e-5);
  CHECK(gradient_check({R({2, 3, 3}, 0.0, 2.0)}, [](Tape&, auto& v) { return normalized_adjacency(v[0]); }) < 1e-5);
  // Operators indexed by b * stride + offset + t: 2 windows, 3 nodes, 3 steps.
  CHECK(gradient_check({R({6, 3, 3}), R({6, 3, 2})},
                       [](Tape&, auto& v) { return spatial_mix(v[0], v[1], 3, 2, 1); }) < 1e-5);
  CHECK(gradient_check({R({3, 4})}, [](Tape&, auto& v) { return sum(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4})}, [](Tape&, auto& v) { return mean(v[0]); }) < 1e-5);
  CHECK(gradient_check({R({3, 4}), R({3, 4})}, [](Tape&, auto& v) { return mse(v[0], v[1]); }) < 1e-5);
}

TEST_CASE("gradient check on random composite graphs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 3 + trial % 3;
    std::vector<Tensor> in = {random_tensor({2 * n, 5, 2}, rng), random_tensor({2, 2, 4}, rng),
                              random_tensor({Index(2) * 5 * n}, rng, -2.0, 2.0), random_tensor({2, 3}, rng)};
    std::vector<Index> rows, cols;
    for (Index k = 0; k < n; ++k) {
      rows.push_back(k);
      cols.push_back((k + 1) % n);
    }
    // 2 windows x 5 steps of adjacency, one edge set of size n.
    const double worst = gradient_check(in, [&](Tape&, auto& v) {
      const Var a = normalized_adjacency(scatter_square(softplus(v[2]), 10, n, rows, cols));
      const Var h = glu(temporal_conv1d(v[0], v[1]));  // [2n, 4, 2]
      const Var mixed = tanh(linear(spatial_mix(a, h, n, 5, 1), v[3]));
      return sigmoid(select_step(mixed, 3));
    }, 100 + trial);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("normalized adjacency examples") {
  Tape tape;
  const Var z = normalized_adjacency(tape.constant(Tensor({1, 2, 2}, 0.0)));
  CHECK(z.value()[0] == 1.0);
  CHECK(z.value()[1] == 0.0);
  CHECK(z.value()[3] == 1.0);
  // A = [[0,1],[1,0]] -> A + I has row sums 2 -> every entry 0.5.
  const Var h = normalized_adjacency(tape.constant(Tensor({1, 2, 2}, {0, 1, 1, 0})));
  for (Index i = 0; i < 4; ++i) CHECK(h.value()[i] == doctest::Approx(0.5).epsilon(1e-15));
  check_kind(ErrorKind::NegativeWeight, [&] { normalized_adjacency(tape.constant(Tensor({1, 2, 2}, {0, -1, 0, 0}))); });
}

TEST_CASE("matmul identity and batch permutation properties") {
  std::mt19937_64 rng(4);
  Tape tape;
  const Tensor a = random_tensor({4, 3}, rng);
  const Tensor b = random_tensor({3, 2}, rng);
  Tensor eye({3, 3}, 0.0);
  for (Index i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  const auto ab = matmul(tape.constant(a), tape.constant(b)).value();
  const auto aib = matmul(matmul(tape.constant(a), tape.constant(eye)), tape.constant(b)).value();
  CHECK((ab.flat() == aib.flat()));

  // Swapping the two batch rows commutes with elementwise ops.
  const Tensor x = random_tensor({2, 5}, rng);
  Tensor swapped({2, 5});
  for (Index j = 0; j < 5; ++j) {
    swapped[j] = x[5 + j];
    swapped[5 + j] = x[j];
  }
  const auto fx = sigmoid(tanh(tape.constant(x))).value();
  const auto fs = sigmoid(tanh(tape.constant(swapped))).value();
  for (Index j = 0; j < 5; ++j) {
    CHECK(fx[j] == fs[5 + j]);
    CHECK(fx[5 + j] == fs[j]);
  }
}

TEST_CASE("adam") {
  ParameterSet params;
  params.add("w", Tensor({3}, {1.0, -2.0, 0.5}));
  AdamState state;
  state.options.lr = 0.01;

  check_kind(ErrorKind::MissingGradient, [&] { adam_step(params, state); });

  params.zero_grad();
  const Tensor before = params.get("w").value;
  adam_step(params, state);
  CHECK((params.get("w").value.flat() == before.flat()));
  CHECK(state.step == 1);

  // Constant gradient: bias-corrected moments equal g and g^2 exactly, so each
  // step moves by lr * g / (|g| + eps).
  const double g[3] = {0.3, -2.0, 1e-3};
  state = AdamState{};
  state.options.lr = 0.01;
  for (int s = 0; s < 200; ++s) {
    params.get("w").grad = Tensor({3}, {g[0], g[1], g[2]});
    params.get("w").grad_ready = true;
    const Tensor prev = params.get("w").value;
    adam_step(params, state);
    for (Index i = 0; i < 3; ++i) {
      const double expected = -0.01 * g[i] / (std::abs(g[i]) + 1e-8);
      REQUIRE((params.get("w").value[i] - prev[i]) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  CHECK(state.step == 200);
}

TEST_CASE("fixed seed gives bit-identical training") {
  auto run = [] {
    std::mt19937_64 rng(42);
    ParameterSet params;
    params.add_glorot("w1", {3, 8}, 3, 8, rng);
    params.add_zeros("b1", {8});
    params.add_glorot("w2", {8, 1}, 8, 1, rng);
    const Tensor x = random_tensor({16, 3}, rng);
    const Tensor y = random_tensor({16, 1}, rng);
    AdamState state;
    for (int s = 0; s < 50; ++s) {
      Tape tape;
      const Var h = relu(add_bias(linear(tape.constant(x), tape.parameter(params.get("w1"))), tape.parameter(params.get("b1"))));
      const Var loss = mse(linear(h, tape.parameter(params.get("w2"))), tape.constant(y));
      params.zero_grad();
      tape.backward(loss);
      adam_step(params, state);
    }
    return params.get("w1").value.flat();
  };
  const VectorXd a = run();
  const VectorXd b = run();
  CHECK((a == b));
}

TEST_CASE("parameter checkpoint round trip") {
  std::mt19937_64 rng(8);
  ParameterSet params;
  params.add_glorot("layer.w", {4, 3}, 4, 3, rng);
  params.add("layer.b", Tensor({3}, {0.1, -1e-17, 12345.678901234567}));
  const auto back = ParameterSet::from_json(params.to_json());
  REQUIRE(back.size() == 2);
  CHECK((back.get("layer.w").value.flat() == params.get("layer.w").value.flat()));
  CHECK((back.get("layer.b").value.flat() == params.get("layer.b").value.flat()));
  CHECK(back.get("layer.w").value.shape() == Shape{4, 3});
  CHECK(params.scalar_count() == 15);
}
