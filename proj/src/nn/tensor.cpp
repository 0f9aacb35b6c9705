#include "ceilopt/nn/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ceilopt/errors.hpp"

namespace ceilopt::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void accumulate(Node& parent, const std::vector<double>& g) {
  if (!parent.requires_grad) return;
  for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += g[i];
}

}  // namespace

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

double Node::item() const {
  require(value.size() == 1, "item() on a non-scalar tensor");
  return value[0];
}

void Node::zero_grad() {
  if (requires_grad) std::fill(grad.begin(), grad.end(), 0.0);
}

Tensor constant(Shape shape, std::vector<double> values) {
  require(values.size() == shape.size(), "values do not match shape " + shape.str());
  auto t = std::make_shared<Node>();
  t->shape = shape;
  t->value = std::move(values);
  return t;
}

Tensor zeros(Shape shape) { return constant(shape, std::vector<double>(shape.size(), 0.0)); }

Tensor parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  t->requires_grad = true;
  t->grad.assign(t->value.size(), 0.0);
  return t;
}

Tensor make_node(Shape shape, std::vector<double> value, std::vector<Tensor> parents) {
  Tensor t = constant(shape, std::move(value));
  for (const auto& p : parents) {
    if (p->consumed_) throw UsageError("tensor belongs to a graph that was already backpropagated");
    t->requires_grad = t->requires_grad || p->requires_grad;
  }
  if (t->requires_grad) t->grad.assign(t->value.size(), 0.0);
  t->parents_ = std::move(parents);
  return t;
}

void set_backward(const Tensor& out, std::function<void(Node&)> fn) {
  if (out->requires_grad) out->backward_ = std::move(fn);
}

void backward(const Tensor& loss) {
  require(loss->size() == 1, "backward needs a scalar loss, got " + loss->shape.str());
  if (loss->consumed_) throw UsageError("backward called twice on the same graph");
  if (!loss->requires_grad) throw UsageError("loss does not depend on any parameter");

  // Iterative post-order gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents_.size()) {
      Node* p = node->parents_[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_) node->backward_(*node);
  }
  // Release the graph; leaves keep their accumulated gradient.
  for (Node* node : order) {
    if (node->parents_.empty()) continue;
    node->parents_.clear();
    node->backward_ = nullptr;
    node->consumed_ = true;
  }
  loss->consumed_ = true;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Shape xs = x->shape;
  const Shape ws = weight->shape;
  require(ws.h == kKernel && ws.w == kKernel, "conv2d expects 5x5 kernels");
  require(ws.c == xs.c, "conv2d channel mismatch: input " + xs.str() + ", weight " + ws.str());
  require(bias->size() == static_cast<std::size_t>(ws.n), "conv2d bias size mismatch");
  const int out_c = ws.n;
  const int in_c = xs.c;
  const int hw = xs.h * xs.w;
  const int patch = in_c * kKernel * kKernel;
  constexpr int pad = kKernel / 2;

  auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(xs.n) * patch * hw, 0.0);
  const Shape os{xs.n, out_c, xs.h, xs.w};
  std::vector<double> out(os.size());
  const ConstMapMatrix wm(weight->value.data(), out_c, patch);
  for (int n = 0; n < xs.n; ++n) {
    double* col = cols->data() + static_cast<std::size_t>(n) * patch * hw;
    const double* xin = x->value.data() + static_cast<std::size_t>(n) * in_c * hw;
    for (int c = 0; c < in_c; ++c) {
      for (int ky = 0; ky < kKernel; ++ky) {
        for (int kx = 0; kx < kKernel; ++kx) {
          double* row = col + static_cast<std::size_t>((c * kKernel + ky) * kKernel + kx) * hw;
          for (int i = 0; i < xs.h; ++i) {
            const int si = i + ky - pad;
            if (si < 0 || si >= xs.h) continue;
            for (int j = 0; j < xs.w; ++j) {
              const int sj = j + kx - pad;
              if (sj >= 0 && sj < xs.w) row[i * xs.w + j] = xin[(c * xs.h + si) * xs.w + sj];
            }
          }
        }
      }
    }
    MapMatrix om(out.data() + static_cast<std::size_t>(n) * out_c * hw, out_c, hw);
    om.noalias() = wm * ConstMapMatrix(col, patch, hw);
    for (int o = 0; o < out_c; ++o) om.row(o).array() += bias->value[o];
  }

  Tensor y = make_node(os, std::move(out), {x, weight, bias});
  set_backward(y, [x, weight, bias, cols, xs, out_c, in_c, hw, patch](Node& self) {
    const ConstMapMatrix wm(weight->value.data(), out_c, patch);
    RowMatrix gcol(patch, hw);
    for (int n = 0; n < xs.n; ++n) {
      const ConstMapMatrix gout(self.grad.data() + static_cast<std::size_t>(n) * out_c * hw, out_c, hw);
      const ConstMapMatrix col(cols->data() + static_cast<std::size_t>(n) * patch * hw, patch, hw);
      if (weight->requires_grad) {
        MapMatrix(weight->grad.data(), out_c, patch).noalias() += gout * col.transpose();
      }
      if (bias->requires_grad) {
        for (int o = 0; o < out_c; ++o) bias->grad[o] += gout.row(o).sum();
      }
      if (!x->requires_grad) continue;
      gcol.noalias() = wm.transpose() * gout;
      double* gx = x->grad.data() + static_cast<std::size_t>(n) * in_c * hw;
      for (int c = 0; c < in_c; ++c) {
        for (int ky = 0; ky < kKernel; ++ky) {
          for (int kx = 0; kx < kKernel; ++kx) {
            const double* row = gcol.data() + static_cast<std::size_t>((c * kKernel + ky) * kKernel + kx) * hw;
            for (int i = 0; i < xs.h; ++i) {
              const int si = i + ky - kKernel / 2;
              if (si < 0 || si >= xs.h) continue;
              for (int j = 0; j < xs.w; ++j) {
                const int sj = j + kx - kKernel / 2;
                if (sj >= 0 && sj < xs.w) gx[(c * xs.h + si) * xs.w + sj] += row[i * xs.w + j];
              }
            }
          }
        }
      }
    }
  });
  return y;
}

Tensor maxpool2(const Tensor& x) {
  const Shape xs = x->shape;
  if (xs.h % 2 != 0 || xs.w % 2 != 0) throw UsageError("maxpool2 needs even spatial dims, got " + xs.str());
  const Shape os{xs.n, xs.c, xs.h / 2, xs.w / 2};
  std::vector<double> out(os.size());
  auto arg = std::make_shared<std::vector<std::size_t>>(os.size());
  for (int nc = 0; nc < xs.n * xs.c; ++nc) {
    for (int i = 0; i < os.h; ++i) {
      for (int j = 0; j < os.w; ++j) {
        std::size_t best = (static_cast<std::size_t>(nc) * xs.h + 2 * i) * xs.w + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t k = (static_cast<std::size_t>(nc) * xs.h + 2 * i + di) * xs.w + 2 * j + dj;
            if (x->value[k] > x->value[best]) best = k;  // ties keep the first
          }
        }
        const std::size_t o = (static_cast<std::size_t>(nc) * os.h + i) * os.w + j;
        out[o] = x->value[best];
        (*arg)[o] = best;
      }
    }
  }
  Tensor y = make_node(os, std::move(out), {x});
  set_backward(y, [x, arg](Node& self) {
    for (std::size_t o = 0; o < arg->size(); ++o) x->grad[(*arg)[o]] += self.grad[o];
  });
  return y;
}

Tensor upsample2(const Tensor& x) {
  const Shape xs = x->shape;
  const Shape os{xs.n, xs.c, 2 * xs.h, 2 * xs.w};
  std::vector<double> out(os.size());
  for (int nc = 0; nc < xs.n * xs.c; ++nc) {
    for (int i = 0; i < os.h; ++i) {
      for (int j = 0; j < os.w; ++j) {
        out[(static_cast<std::size_t>(nc) * os.h + i) * os.w + j] =
            x->value[(static_cast<std::size_t>(nc) * xs.h + i / 2) * xs.w + j / 2];
      }
    }
  }
  Tensor y = make_node(os, std::move(out), {x});
  set_backward(y, [x, xs, os](Node& self) {
    for (int nc = 0; nc < xs.n * xs.c; ++nc) {
      for (int i = 0; i < os.h; ++i) {
        for (int j = 0; j < os.w; ++j) {
          x->grad[(static_cast<std::size_t>(nc) * xs.h + i / 2) * xs.w + j / 2] +=
              self.grad[(static_cast<std::size_t>(nc) * os.h + i) * os.w + j];
        }
      }
    }
  });
  return y;
}

Tensor batchnorm(const Tensor& x, const Tensor& scale, const Tensor& shift, double eps) {
  const Shape xs = x->shape;
  require(scale->size() == static_cast<std::size_t>(xs.c) && shift->size() == scale->size(),
          "batchnorm parameters do not match " + std::to_string(xs.c) + " channels");
  const std::size_t plane = static_cast<std::size_t>(xs.h) * xs.w;
  const double count = static_cast<double>(xs.n) * plane;
  auto xhat = std::make_shared<std::vector<double>>(xs.size());
  auto inv_std = std::make_shared<std::vector<double>>(xs.c);
  std::vector<double> out(xs.size());
  for (int c = 0; c < xs.c; ++c) {
    double mean = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      const double* p = x->value.data() + (static_cast<std::size_t>(n) * xs.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) mean += p[k];
    }
    mean /= count;
    double var = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      const double* p = x->value.data() + (static_cast<std::size_t>(n) * xs.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) var += (p[k] - mean) * (p[k] - mean);
    }
    var /= count;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[c] = is;
    for (int n = 0; n < xs.n; ++n) {
      const std::size_t base = (static_cast<std::size_t>(n) * xs.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const double h = (x->value[base + k] - mean) * is;
        (*xhat)[base + k] = h;
        out[base + k] = scale->value[c] * h + shift->value[c];
      }
    }
  }
  Tensor y = make_node(xs, std::move(out), {x, scale, shift});
  set_backward(y, [x, scale, shift, xhat, inv_std, xs, plane, count](Node& self) {
    for (int c = 0; c < xs.c; ++c) {
      double sum_g = 0.0;
      double sum_gh = 0.0;
      for (int n = 0; n < xs.n; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * xs.c + c) * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          sum_g += self.grad[base + k];
          sum_gh += self.grad[base + k] * (*xhat)[base + k];
        }
      }
      if (scale->requires_grad) scale->grad[c] += sum_gh;
      if (shift->requires_grad) shift->grad[c] += sum_g;
      if (!x->requires_grad) continue;
      const double f = scale->value[c] * (*inv_std)[c] / count;
      for (int n = 0; n < xs.n; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * xs.c + c) * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          x->grad[base + k] +=
              f * (count * self.grad[base + k] - sum_g - (*xhat)[base + k] * sum_gh);
        }
      }
    }
  });
  return y;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : slope * x->value[i];
  Tensor y = make_node(x->shape, std::move(out), {x});
  set_backward(y, [x, slope](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x->grad[i] += self.grad[i] * (x->value[i] > 0.0 ? 1.0 : slope);
    }
  });
  return y;
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x->value[i]));
  Tensor y = make_node(x->shape, std::move(out), {x});
  set_backward(y, [x](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      x->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
  return y;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const int in = x->shape.c * x->shape.h * x->shape.w;
  const int out_n = weight->shape.n;
  require(static_cast<std::size_t>(out_n) * in == weight->size(),
          "dense weight " + weight->shape.str() + " does not match input " + x->shape.str());
  require(bias->size() == static_cast<std::size_t>(out_n), "dense bias size mismatch");
  const int batch = x->shape.n;
  std::vector<double> out(static_cast<std::size_t>(batch) * out_n);
  const ConstMapMatrix wm(weight->value.data(), out_n, in);
  const ConstMapMatrix xm(x->value.data(), batch, in);
  MapMatrix om(out.data(), batch, out_n);
  om.noalias() = xm * wm.transpose();
  for (int b = 0; b < batch; ++b) {
    for (int o = 0; o < out_n; ++o) om(b, o) += bias->value[o];
  }
  Tensor y = make_node({batch, out_n, 1, 1}, std::move(out), {x, weight, bias});
  set_backward(y, [x, weight, bias, batch, in, out_n](Node& self) {
    const ConstMapMatrix gm(self.grad.data(), batch, out_n);
    if (weight->requires_grad) {
      MapMatrix(weight->grad.data(), out_n, in).noalias() +=
          gm.transpose() * ConstMapMatrix(x->value.data(), batch, in);
    }
    if (bias->requires_grad) {
      for (int b = 0; b < batch; ++b) {
        for (int o = 0; o < out_n; ++o) bias->grad[o] += gm(b, o);
      }
    }
    if (x->requires_grad) {
      MapMatrix(x->grad.data(), batch, in).noalias() +=
          gm * ConstMapMatrix(weight->value.data(), out_n, in);
    }
  });
  return y;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  const Shape as = a->shape;
  const Shape bs = b->shape;
  require(as.n == bs.n && as.h == bs.h && as.w == bs.w,
          "concat shape mismatch: " + as.str() + " vs " + bs.str());
  const std::size_t plane = static_cast<std::size_t>(as.h) * as.w;
  const Shape os{as.n, as.c + bs.c, as.h, as.w};
  std::vector<double> out(os.size());
  for (int n = 0; n < as.n; ++n) {
    std::copy_n(a->value.data() + n * as.c * plane, as.c * plane, out.data() + n * os.c * plane);
    std::copy_n(b->value.data() + n * bs.c * plane, bs.c * plane,
                out.data() + (n * os.c + as.c) * plane);
  }
  Tensor y = make_node(os, std::move(out), {a, b});
  set_backward(y, [a, b, as, bs, os, plane](Node& self) {
    for (int n = 0; n < as.n; ++n) {
      const double* g = self.grad.data() + n * os.c * plane;
      if (a->requires_grad) {
        for (std::size_t k = 0; k < as.c * plane; ++k) a->grad[n * as.c * plane + k] += g[k];
      }
      if (b->requires_grad) {
        for (std::size_t k = 0; k < bs.c * plane; ++k) b->grad[n * bs.c * plane + k] += g[as.c * plane + k];
      }
    }
  });
  return y;
}

Tensor add_constant(const Tensor& x, std::span<const double> offset) {
  require(offset.size() == x->size(), "offset size mismatch");
  std::vector<double> out(x->value);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += offset[i];
  Tensor y = make_node(x->shape, std::move(out), {x});
  set_backward(y, [x](Node& self) { accumulate(*x, self.grad); });
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a->shape == b->shape, "add shape mismatch");
  std::vector<double> out(a->value);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  Tensor y = make_node(a->shape, std::move(out), {a, b});
  set_backward(y, [a, b](Node& self) {
    accumulate(*a, self.grad);
    accumulate(*b, self.grad);
  });
  return y;
}

Tensor scale(const Tensor& x, double s) {
  std::vector<double> out(x->value);
  for (double& v : out) v *= s;
  Tensor y = make_node(x->shape, std::move(out), {x});
  set_backward(y, [x, s](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += s * self.grad[i];
  });
  return y;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x->value) acc += v;
  Tensor y = make_node({}, {acc}, {x});
  set_backward(y, [x](Node& self) {
    for (double& g : x->grad) g += self.grad[0];
  });
  return y;
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
  require(weights.size() == x->size(), "weighted_sum size mismatch");
  auto w = std::make_shared<std::vector<double>>(weights.begin(), weights.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < w->size(); ++i) acc += (*w)[i] * x->value[i];
  Tensor y = make_node({}, {acc}, {x});
  set_backward(y, [x, w](Node& self) {
    for (std::size_t i = 0; i < w->size(); ++i) x->grad[i] += self.grad[0] * (*w)[i];
  });
  return y;
}

Tensor mse(const Tensor& x, std::span<const double> target) {
  require(target.size() == x->size(), "mse target size mismatch");
  auto diff = std::make_shared<std::vector<double>>(x->size());
  double acc = 0.0;
  for (std::size_t i = 0; i < diff->size(); ++i) {
    (*diff)[i] = x->value[i] - target[i];
    acc += (*diff)[i] * (*diff)[i];
  }
  const double n = static_cast<double>(diff->size());
  Tensor y = make_node({}, {acc / n}, {x});
  set_backward(y, [x, diff, n](Node& self) {
    for (std::size_t i = 0; i < diff->size(); ++i) x->grad[i] += self.grad[0] * 2.0 * (*diff)[i] / n;
  });
  return y;
}

}  // namespace ceilopt::nn
