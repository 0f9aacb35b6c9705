#include "ceilopt/optim.hpp"

#include <cmath>
#include <string>

#include "ceilopt/errors.hpp"

namespace ceilopt {

void Adam::reset() {
  t_ = 0;
  m_.clear();
  v_.clear();
}

void Adam::step(std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads, double alpha) {
  if (params.size() != grads.size()) throw UsageError("parameter/gradient block count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw UsageError("Adam state does not match parameter blocks");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != m_[b].size()) {
      throw UsageError("parameter/gradient shape mismatch");
    }
    for (double g : grads[b]) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient at optimizer step " + std::to_string(t_ + 1));
      }
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = grads[b][i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      params[b][i] -= alpha * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
    }
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads, double alpha) {
  const std::span<double> p[1] = {params};
  const std::span<const double> g[1] = {grads};
  step(std::span<const std::span<double>>(p), std::span<const std::span<const double>>(g), alpha);
}

void sgd_step(std::span<double> params, std::span<const double> grads, double alpha) {
  if (params.size() != grads.size()) throw UsageError("parameter/gradient shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(grads[i])) throw NumericalError("non-finite gradient in steepest descent");
    params[i] -= alpha * grads[i];
  }
}

double lr_schedule(double alpha0, int epoch) {
  if (epoch < 0) throw UsageError("epoch must be non-negative");
  return alpha0 / std::sqrt(0.2 * epoch + 1.0);
}

double clip_gradients(std::span<const std::span<double>> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw UsageError("clipping norm must be positive");
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& g : grads) {
      for (double& x : g) x *= s;
    }
  }
  return norm;
}

double clip_gradients(std::span<double> grads, double max_norm) {
  const std::span<double> g[1] = {grads};
  return clip_gradients(std::span<const std::span<double>>(g), max_norm);
}

}  // namespace ceilopt
