#include <doctest.h>

#include <filesystem>

#include "ceilopt/errors.hpp"
#include "ceilopt/nn/networks.hpp"
#include "../support/gradcheck.hpp"

using namespace ceilopt;
using namespace ceilopt::nn;

namespace {

constexpr double kTol = 1e-4;

Tensor readout(const Tensor& y, std::uint64_t seed) {
  return weighted_sum(y, oracle::random_weights(y->size(), seed));
}

}  // namespace

TEST_CASE("conv2d gradients") {
  auto x = oracle::random_parameter({2, 3, 7, 6}, 1);
  auto w = oracle::random_parameter({4, 3, 5, 5}, 2, 0.2);
  auto b = oracle::random_parameter({1, 4, 1, 1}, 3);
  CHECK(oracle::gradcheck([&] { return readout(conv2d(x, w, b), 4); }, {x, w, b}) <= kTol);
}

TEST_CASE("conv2d against a direct loop") {
  auto x = oracle::random_parameter({1, 2, 5, 4}, 5);
  auto w = oracle::random_parameter({3, 2, 5, 5}, 6);
  auto b = oracle::random_parameter({1, 3, 1, 1}, 7);
  const auto y = conv2d(x, w, b);
  for (int o = 0; o < 3; ++o) {
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) {
        double s = b->value[o];
        for (int c = 0; c < 2; ++c) {
          for (int ki = 0; ki < 5; ++ki) {
            for (int kj = 0; kj < 5; ++kj) {
              const int ii = i + ki - 2, jj = j + kj - 2;
              if (ii < 0 || ii >= 5 || jj < 0 || jj >= 4) continue;
              s += w->value[((o * 2 + c) * 5 + ki) * 5 + kj] * x->value[(c * 5 + ii) * 4 + jj];
            }
          }
        }
        CHECK(y->value[(o * 5 + i) * 4 + j] == doctest::Approx(s).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("pooling and upsampling gradients") {
  auto x = oracle::random_parameter({2, 2, 6, 4}, 8);
  CHECK(oracle::gradcheck([&] { return readout(maxpool2(x), 9); }, {x}) <= kTol);
  CHECK(oracle::gradcheck([&] { return readout(upsample2(x), 10); }, {x}) <= kTol);
  const auto p = maxpool2(x);
  CHECK(p->shape == Shape{2, 2, 3, 2});
  CHECK(upsample2(x)->shape == Shape{2, 2, 12, 8});
  CHECK_THROWS_AS(maxpool2(zeros({1, 1, 5, 4})), UsageError);
}

TEST_CASE("batchnorm gradients and statistics") {
  auto x = oracle::random_parameter({2, 3, 4, 5}, 11, 2.0);
  auto g = oracle::random_parameter({1, 3, 1, 1}, 12);
  auto s = oracle::random_parameter({1, 3, 1, 1}, 13);
  CHECK(oracle::gradcheck([&] { return readout(batchnorm(x, g, s), 14); }, {x, g, s}) <= kTol);
  auto ones = parameter({1, 3, 1, 1}, {1, 1, 1});
  auto zero = parameter({1, 3, 1, 1}, {0, 0, 0});
  const auto y = batchnorm(x, ones, zero);
  for (int c = 0; c < 3; ++c) {
    double m = 0.0, v = 0.0;
    for (int n = 0; n < 2; ++n) {
      for (int k = 0; k < 20; ++k) m += y->value[(n * 3 + c) * 20 + k];
    }
    m /= 40;
    for (int n = 0; n < 2; ++n) {
      for (int k = 0; k < 20; ++k) v += std::pow(y->value[(n * 3 + c) * 20 + k] - m, 2);
    }
    CHECK(m == doctest::Approx(0.0).scale(1.0));
    CHECK(v / 40 == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("pointwise, dense and concat gradients") {
  auto x = oracle::random_parameter({2, 3, 2, 2}, 15);
  auto y = oracle::random_parameter({2, 1, 2, 2}, 16);
  CHECK(oracle::gradcheck([&] { return readout(leaky_relu(x, 0.1), 17); }, {x}) <= kTol);
  CHECK(oracle::gradcheck([&] { return readout(sigmoid(x), 18); }, {x}) <= kTol);
  CHECK(oracle::gradcheck([&] { return readout(concat(x, y), 19); }, {x, y}) <= kTol);
  CHECK(oracle::gradcheck([&] { return readout(scale(add(x, x), 0.3), 20); }, {x}) <= kTol);
  const std::vector<double> off(x->size(), 0.25);
  CHECK(oracle::gradcheck([&] { return sum(add_constant(x, off)); }, {x}) <= kTol);
  const auto target = oracle::random_weights(x->size(), 21);
  CHECK(oracle::gradcheck([&] { return mse(x, target); }, {x}) <= kTol);

  auto in = oracle::random_parameter({3, 4, 1, 1}, 22);
  auto w = oracle::random_parameter({5, 4, 1, 1}, 23);
  auto b = oracle::random_parameter({1, 5, 1, 1}, 24);
  CHECK(oracle::gradcheck([&] { return readout(dense(in, w, b), 25); }, {in, w, b}) <= kTol);
}

TEST_CASE("assembled u-net gradients on a toy shape") {
  UNet net(48, 8, 3);
  auto input = oracle::random_parameter({1, 1, 48, 8}, 26);
  std::vector<Tensor> leaves{input};
  for (const auto& p : net.parameters().entries()) leaves.push_back(p.tensor);
  // A sample of every tensor. The third down block's bias feeds batch norm
  // directly, so its exact gradient is zero and the floor absorbs FD noise.
  CHECK(oracle::gradcheck([&] { return readout(net.forward(input), 27); }, leaves, 13, 1e-6, 1e-4) <= kTol);
}

TEST_CASE("graph misuse") {
  auto x = oracle::random_parameter({1, 1, 2, 2}, 28);
  auto loss = sum(x);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), UsageError);
  CHECK_THROWS_AS(backward(x), UsageError);  // not a scalar
  CHECK_THROWS_AS(backward(sum(constant({1, 1, 1, 2}, {1.0, 2.0}))), UsageError);
  CHECK_THROWS_AS(concat(zeros({1, 1, 2, 2}), zeros({1, 1, 4, 2})), UsageError);
}

TEST_CASE("u-net architecture counts") {
  const UNet net(432, 24);
  CHECK(net.parameter_count() == 148806);
  const auto rows = net.summary();
  const std::vector<std::size_t> expected{0, 0, 2, 312, 0, 24, 7224, 0, 48, 28848, 96, 57648,
                                          0, 144, 43224, 0, 72, 10812, 0, 26, 326};
  REQUIRE(rows.size() == expected.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].parameters == expected[i]);
    total += rows[i].parameters;
  }
  CHECK(total == 148806);
  CHECK(rows.back().shape == Shape{1, 1, 432, 24});
  CHECK(rows[9].shape == Shape{1, 48, 54, 3});
  CHECK_THROWS_AS(UNet(430, 24), ConfigError);
}

TEST_CASE("u-net output range and copies") {
  UNet a(48, 8, 1);
  const auto input = oracle::random_weights(48 * 8, 29);
  const auto y = a.predict(input);
  for (double v : y) CHECK((v > 0.0 && v < 1.0));
  UNet b = a;
  b.parameters().entries()[3].tensor->value[0] += 1.0;
  CHECK(a.predict(input) == y);
  CHECK(b.predict(input) != y);
}

TEST_CASE("parameter save and load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "ceilopt_nn_test";
  std::filesystem::create_directories(dir);
  UNet a(48, 8, 5), b(48, 8, 6);
  a.parameters().save(dir / "a.bin");
  b.parameters().load(dir / "a.bin");
  const auto input = oracle::random_weights(48 * 8, 30);
  CHECK(a.predict(input) == b.predict(input));
  // convolution weights do not depend on the image size
  UNet wider(48, 16, 0);
  CHECK_NOTHROW(wider.parameters().load(dir / "a.bin"));
  BenchMLP mlp(25, 0);
  mlp.parameters().save(dir / "mlp.bin");
  CHECK_THROWS_AS(wider.parameters().load(dir / "mlp.bin"), IoError);
  CHECK_THROWS_AS(wider.parameters().load(dir / "missing.bin"), IoError);
}

TEST_CASE("he initialization statistics") {
  UNet net(48, 8, 42);
  for (const auto& p : net.parameters().entries()) {
    if (p.kind == ParamKind::conv_weight) {
      const int fan_in = p.tensor->shape.c * 25;
      double s2 = 0.0;
      for (double v : p.tensor->value) s2 += v * v;
      const double var = s2 / p.tensor->size();
      if (p.tensor->size() > 5000) CHECK(var == doctest::Approx(2.0 / fan_in).epsilon(0.1));
    } else if (p.kind == ParamKind::bn_scale) {
      for (double v : p.tensor->value) CHECK(v == 1.0);
    } else {
      for (double v : p.tensor->value) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("bench MLP sizes and initial prediction") {
  const std::vector<std::pair<int, std::size_t>> sizes{{25, 327}, {50, 652}, {100, 1302}, {200, 2602}, {400, 5202}};
  for (auto [hidden, count] : sizes) CHECK(BenchMLP(hidden, 0).parameter_count() == count);
  BenchMLP mlp(100, 7);
  mlp.set_offset_to(-1.5, 2.0);
  CHECK(mlp.predict()[0] == doctest::Approx(-1.5).epsilon(1e-14));
  CHECK(mlp.predict()[1] == doctest::Approx(2.0).epsilon(1e-14));
  std::vector<Tensor> leaves;
  for (const auto& p : mlp.parameters().entries()) leaves.push_back(p.tensor);
  CHECK(oracle::gradcheck([&] { return readout(mlp.forward(), 31); }, leaves, 7) <= kTol);
}
