#include "ceilopt/nn/networks.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ceilopt/errors.hpp"

namespace ceilopt::nn {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'L', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

std::size_t fan_in(const Shape& s) { return static_cast<std::size_t>(s.c) * s.h * s.w; }

}  // namespace

Tensor ParameterSet::add(std::string name, ParamKind kind, Shape shape) {
  Tensor t = parameter(shape, std::vector<double>(shape.size(), 0.0));
  params_.push_back({std::move(name), kind, t});
  return t;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor->size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.tensor->zero_grad();
}

std::vector<std::span<double>> ParameterSet::values() {
  std::vector<std::span<double>> out;
  for (auto& p : params_) out.emplace_back(p.tensor->value);
  return out;
}

std::vector<std::span<double>> ParameterSet::grads() {
  std::vector<std::span<double>> out;
  for (auto& p : params_) out.emplace_back(p.tensor->grad);
  return out;
}

void ParameterSet::he_init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    auto& v = p.tensor->value;
    switch (p.kind) {
      case ParamKind::conv_weight:
      case ParamKind::dense_weight: {
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in(p.tensor->shape)));
        for (double& x : v) x = normal(rng);
        break;
      }
      case ParamKind::bn_scale:
        std::fill(v.begin(), v.end(), 1.0);
        break;
      default:
        std::fill(v.begin(), v.end(), 0.0);
    }
  }
}

void ParameterSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    put(out, static_cast<std::uint32_t>(p.kind));
    const Shape& s = p.tensor->shape;
    for (int d : {s.n, s.c, s.h, s.w}) put(out, static_cast<std::int32_t>(d));
    out.write(reinterpret_cast<const char*>(p.tensor->value.data()),
              static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

void ParameterSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint: " + path.string());
  if (get<std::uint32_t>(in) != kVersion) throw IoError("unsupported checkpoint version");
  if (get<std::uint32_t>(in) != params_.size()) throw IoError("checkpoint layer count mismatch");
  for (auto& p : params_) {
    if (get<std::uint32_t>(in) != static_cast<std::uint32_t>(p.kind)) {
      throw IoError("checkpoint layer kind mismatch at " + p.name);
    }
    Shape s;
    s.n = get<std::int32_t>(in);
    s.c = get<std::int32_t>(in);
    s.h = get<std::int32_t>(in);
    s.w = get<std::int32_t>(in);
    if (!(s == p.tensor->shape)) throw IoError("checkpoint shape mismatch at " + p.name);
    in.read(reinterpret_cast<char*>(p.tensor->value.data()),
            static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint");
  }
}

UNet::UNet(int height, int width, std::uint64_t seed, double slope)
    : h_(height), w_(width), slope_(slope) {
  if (height < 8 || width < 8 || height % 8 != 0 || width % 8 != 0) {
    throw ConfigError("U-net input " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by 8");
  }
  auto make = [this](const std::string& name, int in, int out) {
    ConvBlock b;
    b.bn_scale = params_.add(name + ".bn.scale", ParamKind::bn_scale, {1, in, 1, 1});
    b.bn_shift = params_.add(name + ".bn.shift", ParamKind::bn_shift, {1, in, 1, 1});
    b.weight = params_.add(name + ".conv.weight", ParamKind::conv_weight, {out, in, kKernel, kKernel});
    b.bias = params_.add(name + ".conv.bias", ParamKind::conv_bias, {1, out, 1, 1});
    return b;
  };
  down_[0] = make("down1", 1, 12);
  down_[1] = make("down2", 12, 24);
  down_[2] = make("down3", 24, 48);
  bottleneck_ = make("bottleneck", 48, 48);
  up_[0] = make("up1", 48 + 24, 24);
  up_[1] = make("up2", 24 + 12, 12);
  up_[2] = make("up3", 12 + 1, 1);
  params_.he_init(seed);
}

UNet::UNet(const UNet& other) : UNet(other.h_, other.w_, 0, other.slope_) {
  const auto& src = other.params_.entries();
  const auto& dst = params_.entries();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].tensor->value = src[i].tensor->value;
}

UNet& UNet::operator=(const UNet& other) {
  if (this != &other) *this = UNet(other);
  return *this;
}

Tensor UNet::block(const Tensor& x, const ConvBlock& b, bool activate) const {
  Tensor y = conv2d(batchnorm(x, b.bn_scale, b.bn_shift), b.weight, b.bias);
  return activate ? leaky_relu(y, slope_) : y;
}

Tensor UNet::forward(const Tensor& input) const {
  const Shape s = input->shape;
  if (s.c != 1 || s.h != h_ || s.w != w_) {
    throw UsageError("U-net expects 1x" + std::to_string(h_) + "x" + std::to_string(w_) +
                     " input, got " + s.str());
  }
  const Tensor d1 = block(maxpool2(input), down_[0], true);
  const Tensor d2 = block(maxpool2(d1), down_[1], true);
  const Tensor d3 = block(maxpool2(d2), down_[2], false);
  const Tensor mid = block(d3, bottleneck_, true);
  const Tensor u1 = block(concat(upsample2(mid), d2), up_[0], true);
  const Tensor u2 = block(concat(upsample2(u1), d1), up_[1], true);
  return sigmoid(block(concat(upsample2(u2), input), up_[2], false));
}

std::vector<double> UNet::predict(std::span<const double> input) const {
  const Tensor out = forward(constant({1, 1, h_, w_}, {input.begin(), input.end()}));
  return out->value;
}

std::vector<LayerRow> UNet::summary() const {
  const int h = h_, w = w_;
  auto bn = [](const ConvBlock& b) { return b.bn_scale->size() + b.bn_shift->size(); };
  auto conv = [](const ConvBlock& b) { return b.weight->size() + b.bias->size(); };
  return {
      {"input", {1, 1, h, w}, 0},
      {"max pooling", {1, 1, h / 2, w / 2}, 0},
      {"batch norm", {1, 1, h / 2, w / 2}, bn(down_[0])},
      {"convolution & leaky ReLU", {1, 12, h / 2, w / 2}, conv(down_[0])},
      {"max pooling", {1, 12, h / 4, w / 4}, 0},
      {"batch norm", {1, 12, h / 4, w / 4}, bn(down_[1])},
      {"convolution & leaky ReLU", {1, 24, h / 4, w / 4}, conv(down_[1])},
      {"max pooling", {1, 24, h / 8, w / 8}, 0},
      {"batch norm", {1, 24, h / 8, w / 8}, bn(down_[2])},
      {"convolution", {1, 48, h / 8, w / 8}, conv(down_[2])},
      {"batch norm", {1, 48, h / 8, w / 8}, bn(bottleneck_)},
      {"convolution & leaky ReLU", {1, 48, h / 8, w / 8}, conv(bottleneck_)},
      {"upsample & skip connection", {1, 72, h / 4, w / 4}, 0},
      {"batch norm", {1, 72, h / 4, w / 4}, bn(up_[0])},
      {"convolution & leaky ReLU", {1, 24, h / 4, w / 4}, conv(up_[0])},
      {"upsample & skip connection", {1, 36, h / 2, w / 2}, 0},
      {"batch norm", {1, 36, h / 2, w / 2}, bn(up_[1])},
      {"convolution & leaky ReLU", {1, 12, h / 2, w / 2}, conv(up_[1])},
      {"upsample & skip connection", {1, 13, h, w}, 0},
      {"batch norm", {1, 13, h, w}, bn(up_[2])},
      {"convolution & Sigmoid", {1, 1, h, w}, conv(up_[2])},
  };
}

BenchMLP::BenchMLP(int hidden, std::uint64_t seed, double slope) : hidden_(hidden), slope_(slope) {
  if (hidden < 1) throw ConfigError("MLP hidden width must be positive");
  w1_ = params_.add("hidden.weight", ParamKind::dense_weight, {hidden, 10, 1, 1});
  b1_ = params_.add("hidden.bias", ParamKind::dense_bias, {1, hidden, 1, 1});
  w2_ = params_.add("out.weight", ParamKind::dense_weight, {2, hidden, 1, 1});
  b2_ = params_.add("out.bias", ParamKind::dense_bias, {1, 2, 1, 1});
  params_.he_init(seed);
  // Fixed input drawn from a stream independent of the weights.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  input_.resize(10);
  for (double& x : input_) x = u(rng);
}

Tensor BenchMLP::forward() const {
  const Tensor x = constant({1, 10, 1, 1}, input_);
  const Tensor h = leaky_relu(dense(x, w1_, b1_), slope_);
  // (raw - raw0) + target keeps the initial prediction exact.
  return add_constant(add_constant(dense(h, w2_, b2_), shift_), offset_);
}

std::array<double, 2> BenchMLP::predict() const {
  const Tensor y = forward();
  return {y->value[0], y->value[1]};
}

void BenchMLP::set_offset_to(double x0, double y0) {
  shift_ = {0.0, 0.0};
  offset_ = {0.0, 0.0};
  const auto p = predict();
  shift_ = {-p[0], -p[1]};
  offset_ = {x0, y0};
}

}  // namespace ceilopt::nn
