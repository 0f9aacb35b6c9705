#pragma once

#include <span>
#include <vector>

namespace ceilopt {

/// Bias-corrected Adam over a set of parameter blocks. Blocks are matched
/// by position on every call, so the caller must pass them in a fixed order.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads, double alpha);
  void step(std::span<double> params, std::span<const double> grads, double alpha);

  long steps() const { return t_; }
  void reset();

 private:
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

void sgd_step(std::span<double> params, std::span<const double> grads, double alpha);

// alpha0 (0.2 epoch + 1)^-1/2
double lr_schedule(double alpha0, int epoch);

// Scales all blocks by max_norm / |g| when the global L2 norm exceeds max_norm.
// Returns the norm before clipping.
double clip_gradients(std::span<const std::span<double>> grads, double max_norm);
double clip_gradients(std::span<double> grads, double max_norm);

}  // namespace ceilopt
