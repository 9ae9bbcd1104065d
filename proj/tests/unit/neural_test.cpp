#include <random>
#include <sstream>

#include "curious/neural.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace curious;

namespace {

Vector RandomVector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Random net with hidden widths drawn from [2, 9] and unit-scale weights.
NetworkParams RandomNet(std::mt19937_64& rng, Activation output) {
  const int depth = 1 + static_cast<int>(rng() % 3);
  std::vector<int> sizes{2 + static_cast<int>(rng() % 8)};
  for (int k = 0; k < depth; ++k) sizes.push_back(2 + static_cast<int>(rng() % 8));
  sizes.push_back(1 + static_cast<int>(rng() % 4));
  return InitNetwork(sizes, output, rng, 0.5);
}

// Sum of output .* upstream, the scalar Backward differentiates.
double Objective(const NetworkParams& net, const Vector& x, const Vector& up) {
  return Forward(net, x).dot(up);
}

}  // namespace

TEST_CASE("forward basics") {
  std::mt19937_64 rng(1);
  NetworkParams zero = ZerosLike(InitNetwork({3, 5, 2}, Activation::kIdentity, rng));
  CHECK(Forward(zero, Vector::Ones(3)).isZero(0.0));

  NetworkParams id;
  id.layers = {{Matrix::Identity(4, 4), Vector::Zero(4)}};
  const Vector x = RandomVector(4, rng);
  CHECK(Forward(id, x) == x);

  CHECK_THROWS_AS(Forward(zero, Vector::Ones(4)), ShapeMismatchError);
}

TEST_CASE("forward matches the loop oracle") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 50; ++k) {
    const NetworkParams net = RandomNet(rng, k % 2 ? Activation::kTanh : Activation::kIdentity);
    const Vector x = RandomVector(net.input_dim(), rng);
    const Vector a = Forward(net, x);
    const Vector b = oracle::Forward(net, x);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
    // Batched evaluation agrees column by column.
    Matrix batch(net.input_dim(), 3);
    batch << x, 2 * x, -x;
    const Matrix out = ForwardBatch(net, batch);
    CHECK((out.col(2) - oracle::Forward(net, -x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("backward matches central differences") {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const NetworkParams net = RandomNet(rng, k % 2 ? Activation::kTanh : Activation::kIdentity);
    const Vector x = RandomVector(net.input_dim(), rng);
    const Vector up = RandomVector(net.output_dim(), rng);
    const Gradients g = Backward(net, x, up);
    const auto numeric = oracle::NumericGradient(
        net, [&](const NetworkParams& p) { return Objective(p, x, up); });
    worst = std::max(worst, oracle::MaxRelativeError(oracle::Flatten(g.params), numeric));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("zero inputs freeze their first-layer columns exactly") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const NetworkParams net = InitNetwork({10, 16, 16, 3}, Activation::kTanh, rng, 0.5);
    Matrix x(10, 8);
    for (int c = 0; c < 8; ++c) x.col(c) = RandomVector(10, rng);
    x.row(3).setZero();
    x.row(7).setZero();
    ForwardCache cache;
    ForwardBatch(net, x, &cache);
    Matrix up(3, 8);
    for (int c = 0; c < 8; ++c) up.col(c) = RandomVector(3, rng);
    const Gradients g = Backward(net, cache, up);
    CHECK(g.params.layers[0].weight.col(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.params.layers[0].weight.col(7).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.params.layers[0].weight.col(0).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("zero upstream gives zero gradients") {
  std::mt19937_64 rng(5);
  const NetworkParams net = InitNetwork({4, 6, 2}, Activation::kTanh, rng);
  const Gradients g = Backward(net, RandomVector(4, rng), Vector::Zero(2));
  for (const auto& l : g.params.layers) {
    CHECK(l.weight.isZero(0.0));
    CHECK(l.bias.isZero(0.0));
  }
  CHECK(g.input.isZero(0.0));
  CHECK_THROWS_AS(Backward(net, RandomVector(4, rng), Vector::Zero(3)), ShapeMismatchError);
}

TEST_CASE("adam") {
  std::mt19937_64 rng(6);
  SUBCASE("zero gradient keeps parameters and counts the step") {
    NetworkParams net = InitNetwork({3, 4, 2}, Activation::kIdentity, rng);
    const NetworkParams before = net;
    AdamState opt = MakeAdam(net, 1e-3);
    AdamStep(net, ZerosLike(net), opt);
    CHECK(net == before);
    CHECK(opt.step == 1);
  }
  SUBCASE("hand-computed single step") {
    NetworkParams net;
    net.layers = {{Matrix::Constant(1, 1, 0.5), Vector::Zero(1)}};
    NetworkParams grad = ZerosLike(net);
    grad.layers[0].weight(0, 0) = 2.0;
    AdamState opt = MakeAdam(net, 0.1);
    AdamStep(net, grad, opt);
    // m = 0.2, v = 0.004; corrected m = 2, v = 4; step = 0.1 * 2 / (2 + 1e-8).
    const double expected = 0.5 - 0.1 * 2.0 / (2.0 + 1e-8);
    CHECK(net.layers[0].weight(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(opt.first_moment.layers[0].weight(0, 0) == doctest::Approx(0.2));
    CHECK(opt.second_moment.layers[0].weight(0, 0) == doctest::Approx(0.004));
  }
  SUBCASE("constant gradient descends") {
    NetworkParams net = InitNetwork({2, 2}, Activation::kIdentity, rng);
    const double start = net.layers[0].weight(0, 1);
    NetworkParams grad = ZerosLike(net);
    grad.layers[0].weight(0, 1) = -3.0;
    AdamState opt = MakeAdam(net, 1e-2);
    for (int k = 0; k < 100; ++k) AdamStep(net, grad, opt);
    CHECK(net.layers[0].weight(0, 1) > start + 0.5);
  }
  SUBCASE("non-finite gradients are refused") {
    NetworkParams net = InitNetwork({2, 2}, Activation::kIdentity, rng);
    const NetworkParams before = net;
    NetworkParams grad = ZerosLike(net);
    grad.layers[0].bias[0] = std::nan("");
    AdamState opt = MakeAdam(net, 1e-2);
    CHECK_THROWS_AS(AdamStep(net, grad, opt), NumericError);
    CHECK(net == before);
    CHECK(opt.step == 0);
  }
}

TEST_CASE("polyak and averaging") {
  NetworkParams one;
  one.layers = {{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0)}};
  const NetworkParams zero = ZerosLike(one);
  CHECK(Polyak(one, zero, 1.0) == one);
  CHECK(Polyak(one, zero, 0.0) == zero);
  CHECK(Polyak(one, zero, 0.95).layers[0].weight(0, 0) == doctest::Approx(0.95));

  std::mt19937_64 rng(7);
  const NetworkParams p = InitNetwork({3, 4, 2}, Activation::kIdentity, rng);
  NetworkParams minus = p;
  for (auto& l : minus.layers) {
    l.weight = -l.weight;
    l.bias = -l.bias;
  }
  const std::vector<NetworkParams> pair{p, minus};
  const NetworkParams avg = Average(pair);
  for (const auto& l : avg.layers) CHECK(l.weight.isZero(0.0));
  const std::vector<NetworkParams> single{p};
  CHECK(Average(single) == p);

  std::vector<NetworkParams> three;
  for (int k = 0; k < 3; ++k) three.push_back(InitNetwork({3, 4, 2}, Activation::kIdentity, rng));
  const auto flat = oracle::Flatten(Average(three));
  const auto a = oracle::Flatten(three[0]);
  const auto b = oracle::Flatten(three[1]);
  const auto c = oracle::Flatten(three[2]);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    CHECK(std::abs(flat[i] - (a[i] + b[i] + c[i]) / 3.0) <= 1e-12);
  }
  const NetworkParams other = InitNetwork({3, 5, 2}, Activation::kIdentity, rng);
  CHECK_THROWS_AS(Polyak(p, other, 0.5), ShapeMismatchError);
  const std::vector<NetworkParams> mixed{p, other};
  CHECK_THROWS_AS(Average(mixed), ShapeMismatchError);
}

TEST_CASE("network files round-trip bit-exactly") {
  std::mt19937_64 rng(8);
  const NetworkParams net = InitNetwork({5, 7, 3}, Activation::kTanh, rng);
  std::stringstream buf;
  SaveNetwork(buf, net);
  const NetworkParams back = LoadNetwork(buf);
  CHECK(back == net);
  CHECK(back.output == Activation::kTanh);
  std::istringstream truncated(buf.str().substr(0, buf.str().size() / 2));
  CHECK_THROWS(LoadNetwork(truncated));
  std::istringstream garbage("not a network");
  CHECK_THROWS(LoadNetwork(garbage));
}

TEST_CASE("initialization ranges") {
  std::mt19937_64 rng(9);
  const NetworkParams net = InitNetwork({100, 50, 4}, Activation::kTanh, rng, 3e-3);
  CHECK(net.layers[0].weight.cwiseAbs().maxCoeff() <= 0.1);
  CHECK(net.layers[1].weight.cwiseAbs().maxCoeff() <= 3e-3);
  CHECK(net.parameter_count() == 100 * 50 + 50 + 50 * 4 + 4);
  CHECK_THROWS_AS(InitNetwork({3}, Activation::kTanh, rng), ShapeMismatchError);
}
