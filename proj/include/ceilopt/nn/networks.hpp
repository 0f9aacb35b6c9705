#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ceilopt/nn/tensor.hpp"

namespace ceilopt::nn {

enum class ParamKind : std::uint32_t { conv_weight = 1, conv_bias, bn_scale, bn_shift, dense_weight, dense_bias };

struct NamedParameter {
  std::string name;
  ParamKind kind;
  Tensor tensor;
};

/// Ordered parameter list shared by both networks.
class ParameterSet {
 public:
  Tensor add(std::string name, ParamKind kind, Shape shape);
  const std::vector<NamedParameter>& entries() const { return params_; }
  std::size_t count() const;
  void zero_grad();
  // Views for the optimizer, in a fixed order.
  std::vector<std::span<double>> values();
  std::vector<std::span<double>> grads();
  // weights ~ N(0, 2 / fan_in); biases and shifts 0; scales 1.
  void he_init(std::uint64_t seed);

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<NamedParameter> params_;
};

struct LayerRow {
  std::string layer;
  Shape shape;  // shape after layer, batch axis dropped
  std::size_t parameters = 0;
};

/// U-net of three pooling blocks, a bottleneck and three upsampling blocks
/// with skip connections; maps a 1 x H x W field to (0, 1).
class UNet {
 public:
  UNet(int height, int width, std::uint64_t seed = 0, double slope = 0.01);
  // Copies own their parameters.
  UNet(const UNet& other);
  UNet& operator=(const UNet& other);
  UNet(UNet&&) = default;
  UNet& operator=(UNet&&) = default;

  int height() const { return h_; }
  int width() const { return w_; }
  Tensor forward(const Tensor& input) const;
  std::vector<double> predict(std::span<const double> input) const;

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.count(); }
  std::vector<LayerRow> summary() const;

 private:
  struct ConvBlock {
    Tensor bn_scale, bn_shift, weight, bias;
  };
  Tensor block(const Tensor& x, const ConvBlock& b, bool activate) const;

  int h_;
  int w_;
  double slope_;
  ParameterSet params_;
  ConvBlock down_[3];
  ConvBlock bottleneck_;
  ConvBlock up_[3];
};

/// 10 -> hidden -> 2 MLP whose output is shifted so the initial prediction
/// equals a prescribed point.
class BenchMLP {
 public:
  BenchMLP(int hidden, std::uint64_t seed, double slope = 0.01);

  int hidden() const { return hidden_; }
  std::size_t parameter_count() const { return params_.count(); }
  ParameterSet& parameters() { return params_; }
  const std::vector<double>& input() const { return input_; }

  void set_offset_to(double x0, double y0);
  Tensor forward() const;
  std::array<double, 2> predict() const;

 private:
  int hidden_;
  double slope_;
  ParameterSet params_;
  Tensor w1_, b1_, w2_, b2_;
  std::vector<double> input_;
  std::vector<double> shift_{0.0, 0.0};
  std::vector<double> offset_{0.0, 0.0};
};

}  // namespace ceilopt::nn
