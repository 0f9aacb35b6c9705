#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ceilopt::nn {

/// NCHW shape; unused trailing axes are 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;
  std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Node;
using Tensor = std::shared_ptr<Node>;

/// A value in the reverse-mode graph. Leaves created by `parameter` keep
/// their gradient across backward passes until `zero_grad`; interior nodes
/// drop their graph links once backward has run through them.
class Node {
 public:
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated when requires_grad
  bool requires_grad = false;

  std::size_t size() const { return value.size(); }
  double item() const;
  void zero_grad();

 private:
  friend Tensor make_node(Shape, std::vector<double>, std::vector<Tensor>);
  friend void backward(const Tensor& loss);
  friend void set_backward(const Tensor& out, std::function<void(Node&)> fn);
  std::vector<Tensor> parents_;
  std::function<void(Node&)> backward_;
  bool consumed_ = false;
};

// Non-differentiable input.
Tensor constant(Shape shape, std::vector<double> values);
Tensor zeros(Shape shape);
// Trainable leaf.
Tensor parameter(Shape shape, std::vector<double> values);

// Interior node whose requires_grad follows its parents.
Tensor make_node(Shape shape, std::vector<double> value, std::vector<Tensor> parents);
void set_backward(const Tensor& out, std::function<void(Node&)> fn);

// Runs reverse accumulation from a scalar. The graph is consumed: a second
// call on the same loss throws.
void backward(const Tensor& loss);

// 5x5 convolution, stride 1, zero padding 2. weight (O, C, 5, 5), bias (1, O, 1, 1).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor maxpool2(const Tensor& x);
Tensor upsample2(const Tensor& x);
// Per-channel standardization with current-pass statistics, then affine.
Tensor batchnorm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps = 1e-5);
Tensor leaky_relu(const Tensor& x, double slope = 0.01);
Tensor sigmoid(const Tensor& x);
// x (N, in, 1, 1), weight (out, in, 1, 1), bias (1, out, 1, 1).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
// Channel concatenation.
Tensor concat(const Tensor& a, const Tensor& b);
Tensor add_constant(const Tensor& x, std::span<const double> offset);

Tensor sum(const Tensor& x);
// sum_i w_i x_i: injects an external upstream gradient w.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);
Tensor mse(const Tensor& x, std::span<const double> target);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);

inline constexpr int kKernel = 5;

}  // namespace ceilopt::nn
