// Copyright (c) 2026, The TPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tpn/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "tpn/error.hpp"

namespace tpn::nn {

namespace {

thread_local bool g_grad_enabled = true;
thread_local BranchRecorder* g_recorder = nullptr;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_rank(const Tensor& x, size_t rank, const char* op) {
  if (!x.defined() || x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank-" + std::to_string(rank) +
                     " tensor, got " + (x.defined() ? to_string(x.shape()) : "undefined"));
  }
}

struct Geometry5 {
  int64_t n, c, t, h, w;
  explicit Geometry5(const Shape& s) : n(s[0]), c(s[1]), t(s[2]), h(s[3]), w(s[4]) {}
  int64_t spatial() const { return t * h * w; }
};

int64_t out_extent(int64_t in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

// Column buffer for one sample: rows = (c, kt, kh, kw), cols = (ot, oh, ow).
void im2col(const double* x, const Geometry5& g, Dims3 k, Dims3 s, Dims3 p, int64_t ot_n,
            int64_t oh_n, int64_t ow_n, double* cols) {
  const int64_t plane = ot_n * oh_n * ow_n;
  int64_t row = 0;
  for (int64_t c = 0; c < g.c; ++c) {
    for (int dt = 0; dt < k.t; ++dt) {
      for (int dh = 0; dh < k.h; ++dh) {
        for (int dw = 0; dw < k.w; ++dw, ++row) {
          double* dst = cols + row * plane;
          for (int64_t ot = 0; ot < ot_n; ++ot) {
            const int64_t it = ot * s.t - p.t + dt;
            for (int64_t oh = 0; oh < oh_n; ++oh) {
              const int64_t ih = oh * s.h - p.h + dh;
              double* d = dst + (ot * oh_n + oh) * ow_n;
              if (it < 0 || it >= g.t || ih < 0 || ih >= g.h) {
                std::fill(d, d + ow_n, 0.0);
                continue;
              }
              const double* src = x + ((c * g.t + it) * g.h + ih) * g.w;
              for (int64_t ow = 0; ow < ow_n; ++ow) {
                const int64_t iw = ow * s.w - p.w + dw;
                d[ow] = (iw >= 0 && iw < g.w) ? src[iw] : 0.0;
              }
            }
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const Geometry5& g, Dims3 k, Dims3 s, Dims3 p, int64_t ot_n,
            int64_t oh_n, int64_t ow_n, double* dx) {
  const int64_t plane = ot_n * oh_n * ow_n;
  int64_t row = 0;
  for (int64_t c = 0; c < g.c; ++c) {
    for (int dt = 0; dt < k.t; ++dt) {
      for (int dh = 0; dh < k.h; ++dh) {
        for (int dw = 0; dw < k.w; ++dw, ++row) {
          const double* src = cols + row * plane;
          for (int64_t ot = 0; ot < ot_n; ++ot) {
            const int64_t it = ot * s.t - p.t + dt;
            if (it < 0 || it >= g.t) continue;
            for (int64_t oh = 0; oh < oh_n; ++oh) {
              const int64_t ih = oh * s.h - p.h + dh;
              if (ih < 0 || ih >= g.h) continue;
              const double* sv = src + (ot * oh_n + oh) * ow_n;
              double* d = dx + ((c * g.t + it) * g.h + ih) * g.w;
              for (int64_t ow = 0; ow < ow_n; ++ow) {
                const int64_t iw = ow * s.w - p.w + dw;
                if (iw >= 0 && iw < g.w) d[iw] += sv[ow];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::Node>()) {
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
  node_->value.assign(static_cast<size_t>(nn::numel(shape)), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<detail::Node>()) {
  if (nn::numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
}

Tensor Tensor::make(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                    std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(), [](const Tensor& t) {
      return t.defined() && t.requires_grad();
    });
    if (any) {
      node->requires_grad = true;
      for (auto& p : parents) node->parents.push_back(p.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value); }

void Tensor::backward() {
  if (numel() != 1) throw ShapeError("backward() requires a scalar, got " + to_string(shape()));
  if (!requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent && parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

BranchRecorder::BranchRecorder() : previous_(g_recorder) { g_recorder = this; }
BranchRecorder::~BranchRecorder() { g_recorder = previous_; }

// ---- convolution -----------------------------------------------------------

Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias, Dims3 stride, Dims3 pad) {
  require_rank(x, 5, "conv3d");
  require_rank(weight, 5, "conv3d weight");
  const Geometry5 g(x.shape());
  const int64_t out_c = weight.dim(0);
  if (weight.dim(1) != g.c) {
    throw ShapeError("conv3d: input has " + std::to_string(g.c) + " channels, weight expects " +
                     std::to_string(weight.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_c)) {
    throw ShapeError("conv3d: bias shape " + to_string(bias.shape()));
  }
  const Dims3 k{static_cast<int>(weight.dim(2)), static_cast<int>(weight.dim(3)),
                static_cast<int>(weight.dim(4))};
  const int64_t ot = out_extent(g.t, k.t, stride.t, pad.t);
  const int64_t oh = out_extent(g.h, k.h, stride.h, pad.h);
  const int64_t ow = out_extent(g.w, k.w, stride.w, pad.w);
  if (ot <= 0 || oh <= 0 || ow <= 0) {
    throw ShapeError("conv3d: kernel larger than padded input " + to_string(x.shape()));
  }
  const int64_t kdim = g.c * k.t * k.h * k.w;
  const int64_t plane = ot * oh * ow;
  const bool pointwise = k.t == 1 && k.h == 1 && k.w == 1 && stride.t == 1 && stride.h == 1 &&
                         stride.w == 1 && pad.t == 0 && pad.h == 0 && pad.w == 0;

  std::vector<double> out(static_cast<size_t>(g.n * out_c * plane));
  std::vector<double> cols(pointwise ? 0 : static_cast<size_t>(kdim * plane));
  ConstMapMat wmat(weight.ptr(), out_c, kdim);
  for (int64_t n = 0; n < g.n; ++n) {
    const double* xn = x.ptr() + n * g.c * g.spatial();
    const double* colp = xn;
    if (!pointwise) {
      im2col(xn, g, k, stride, pad, ot, oh, ow, cols.data());
      colp = cols.data();
    }
    MapMat omat(out.data() + n * out_c * plane, out_c, plane);
    omat.noalias() = wmat * ConstMapMat(colp, kdim, plane);
    if (bias.defined()) {
      for (int64_t o = 0; o < out_c; ++o) omat.row(o).array() += bias.data()[o];
    }
  }

  return Tensor::make(
      {g.n, out_c, ot, oh, ow}, std::move(out), {x, weight, bias},
      [g, k, stride, pad, ot, oh, ow, out_c, kdim, plane, pointwise](detail::Node& self) {
        auto& xn = *self.parents[0];
        auto& wn = *self.parents[1];
        detail::Node* bn = self.parents[2].get();
        std::vector<double> cols(pointwise ? 0 : static_cast<size_t>(kdim * plane));
        std::vector<double> dcols(static_cast<size_t>(kdim * plane));
        ConstMapMat wmat(wn.value.data(), out_c, kdim);
        for (int64_t n = 0; n < g.n; ++n) {
          ConstMapMat gout(self.grad.data() + n * out_c * plane, out_c, plane);
          const double* xs = xn.value.data() + n * g.c * g.spatial();
          if (wn.requires_grad) {
            const double* colp = xs;
            if (!pointwise) {
              im2col(xs, g, k, stride, pad, ot, oh, ow, cols.data());
              colp = cols.data();
            }
            MapMat gw(wn.grad_buffer().data(), out_c, kdim);
            gw.noalias() += gout * ConstMapMat(colp, kdim, plane).transpose();
          }
          if (bn && bn->requires_grad) {
            auto& gb = bn->grad_buffer();
            for (int64_t o = 0; o < out_c; ++o) gb[o] += gout.row(o).sum();
          }
          if (xn.requires_grad) {
            double* gx = xn.grad_buffer().data() + n * g.c * g.spatial();
            if (pointwise) {
              MapMat(gx, kdim, plane).noalias() += wmat.transpose() * gout;
            } else {
              MapMat(dcols.data(), kdim, plane).noalias() = wmat.transpose() * gout;
              col2im(dcols.data(), g, k, stride, pad, ot, oh, ow, gx);
            }
          }
        }
      });
}

// ---- normalization -----------------------------------------------------------

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                  bool training, double momentum, double eps) {
  require_rank(x, 5, "batch_norm");
  const Geometry5 g(x.shape());
  if (gamma.numel() != g.c || beta.numel() != g.c || stats.running_mean.numel() != g.c ||
      stats.running_var.numel() != g.c) {
    throw ShapeError("batch_norm: parameter width does not match " + std::to_string(g.c) +
                     " channels");
  }
  const int64_t inner = g.spatial();
  const int64_t count = g.n * inner;
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(g.c);
  std::vector<double> out(x.numel());
  for (int64_t c = 0; c < g.c; ++c) {
    double mean, var;
    if (training) {
      double sum = 0.0;
      for (int64_t n = 0; n < g.n; ++n) {
        const double* p = x.ptr() + (n * g.c + c) * inner;
        for (int64_t i = 0; i < inner; ++i) sum += p[i];
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int64_t n = 0; n < g.n; ++n) {
        const double* p = x.ptr() + (n * g.c + c) * inner;
        for (int64_t i = 0; i < inner; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / static_cast<double>(count);
      auto rm = stats.running_mean.data();
      auto rv = stats.running_var.data();
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      rm[c] = (1.0 - momentum) * rm[c] + momentum * mean;
      rv[c] = (1.0 - momentum) * rv[c] + momentum * unbiased;
    } else {
      mean = stats.running_mean.data()[c];
      var = stats.running_var.data()[c];
    }
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[c] = is;
    const double ga = gamma.data()[c];
    const double be = beta.data()[c];
    for (int64_t n = 0; n < g.n; ++n) {
      const int64_t off = (n * g.c + c) * inner;
      for (int64_t i = 0; i < inner; ++i) {
        const double h = (x.ptr()[off + i] - mean) * is;
        xhat[off + i] = h;
        out[off + i] = ga * h + be;
      }
    }
  }
  return Tensor::make(
      x.shape(), std::move(out), {x, gamma, beta},
      [g, inner, count, training, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](detail::Node& self) {
        auto& xn = *self.parents[0];
        auto& gn = *self.parents[1];
        auto& bn = *self.parents[2];
        const auto& dy = self.grad;
        for (int64_t c = 0; c < g.c; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t n = 0; n < g.n; ++n) {
            const int64_t off = (n * g.c + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              sum_dy += dy[off + i];
              sum_dy_xhat += dy[off + i] * xhat[off + i];
            }
          }
          if (gn.requires_grad) gn.grad_buffer()[c] += sum_dy_xhat;
          if (bn.requires_grad) bn.grad_buffer()[c] += sum_dy;
          if (!xn.requires_grad) continue;
          auto& gx = xn.grad_buffer();
          const double ga = gn.value[c];
          const double is = inv_std[c];
          const double m = static_cast<double>(count);
          for (int64_t n = 0; n < g.n; ++n) {
            const int64_t off = (n * g.c + c) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              if (training) {
                gx[off + i] += ga * is / m *
                               (m * dy[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
              } else {
                gx[off + i] += ga * is * dy[off + i];
              }
            }
          }
        }
      });
}

// ---- elementwise ---------------------------------------------------------------

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = x.ptr()[i] > 0.0 ? x.ptr()[i] : 0.0;
  if (g_recorder) {
    for (int64_t i = 0; i < x.numel(); ++i) g_recorder->record(x.ptr()[i] > 0.0);
  }
  return Tensor::make(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    auto& xn = *self.parents[0];
    auto& gx = xn.grad_buffer();
    for (size_t i = 0; i < gx.size(); ++i) {
      if (xn.value[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

Tensor add_scaled(const Tensor& a, const Tensor& b, double scale) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                     " differ");
  }
  std::vector<double> out(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.ptr()[i] + scale * b.ptr()[i];
  return Tensor::make(a.shape(), std::move(out), {a, b}, [scale](detail::Node& self) {
    auto& an = *self.parents[0];
    auto& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& ga = an.grad_buffer();
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    }
    if (bn.requires_grad) {
      auto& gb = bn.grad_buffer();
      for (size_t i = 0; i < gb.size(); ++i) gb[i] += scale * self.grad[i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                     " differ");
  }
  std::vector<double> out(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.ptr()[i] + b.ptr()[i];
  return Tensor::make(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int k = 0; k < 2; ++k) {
      auto& pn = *self.parents[k];
      if (!pn.requires_grad) continue;
      auto& gp = pn.grad_buffer();
      for (size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
    }
  });
}

// ---- pooling and temporal resampling -------------------------------------------------

Tensor max_pool3d(const Tensor& x, Dims3 kernel, Dims3 stride, Dims3 pad) {
  require_rank(x, 5, "max_pool3d");
  const Geometry5 g(x.shape());
  const int64_t ot = out_extent(g.t, kernel.t, stride.t, pad.t);
  const int64_t oh = out_extent(g.h, kernel.h, stride.h, pad.h);
  const int64_t ow = out_extent(g.w, kernel.w, stride.w, pad.w);
  if (ot <= 0 || oh <= 0 || ow <= 0) {
    throw ShapeError("max_pool3d: window larger than input " + to_string(x.shape()));
  }
  const int64_t planes = g.n * g.c;
  std::vector<double> out(static_cast<size_t>(planes * ot * oh * ow));
  std::vector<int64_t> argmax(out.size());
  size_t o = 0;
  for (int64_t pl = 0; pl < planes; ++pl) {
    const int64_t base = pl * g.spatial();
    for (int64_t a = 0; a < ot; ++a) {
      for (int64_t b = 0; b < oh; ++b) {
        for (int64_t c = 0; c < ow; ++c, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          int64_t best_i = -1;
          for (int dt = 0; dt < kernel.t; ++dt) {
            const int64_t it = a * stride.t - pad.t + dt;
            if (it < 0 || it >= g.t) continue;
            for (int dh = 0; dh < kernel.h; ++dh) {
              const int64_t ih = b * stride.h - pad.h + dh;
              if (ih < 0 || ih >= g.h) continue;
              for (int dw = 0; dw < kernel.w; ++dw) {
                const int64_t iw = c * stride.w - pad.w + dw;
                if (iw < 0 || iw >= g.w) continue;
                const int64_t idx = base + (it * g.h + ih) * g.w + iw;
                if (best_i < 0 || x.ptr()[idx] > best) {
                  best = x.ptr()[idx];
                  best_i = idx;
                }
              }
            }
          }
          if (best_i < 0) throw ShapeError("max_pool3d: window covers only padding");
          out[o] = best;
          argmax[o] = best_i;
          if (g_recorder) g_recorder->record(static_cast<uint64_t>(best_i));
        }
      }
    }
  }
  return Tensor::make({g.n, g.c, ot, oh, ow}, std::move(out), {x},
                      [argmax = std::move(argmax)](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        for (size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
                      });
}

Tensor repeat_time(const Tensor& x, int factor) {
  require_rank(x, 5, "repeat_time");
  if (factor < 1) throw ArgumentError("repeat_time: factor must be >= 1");
  const Geometry5 g(x.shape());
  const int64_t hw = g.h * g.w;
  const int64_t out_t = g.t * factor;
  std::vector<double> out(static_cast<size_t>(x.numel() * factor));
  for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
    for (int64_t t = 0; t < out_t; ++t) {
      const double* src = x.ptr() + (pl * g.t + t / factor) * hw;
      std::copy(src, src + hw, out.begin() + (pl * out_t + t) * hw);
    }
  }
  return Tensor::make({g.n, g.c, out_t, g.h, g.w}, std::move(out), {x},
                      [g, hw, out_t, factor](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
                          for (int64_t t = 0; t < out_t; ++t) {
                            const double* src = self.grad.data() + (pl * out_t + t) * hw;
                            double* dst = gx.data() + (pl * g.t + t / factor) * hw;
                            for (int64_t i = 0; i < hw; ++i) dst[i] += src[i];
                          }
                        }
                      });
}

Tensor subsample_time(const Tensor& x, int rate) {
  require_rank(x, 5, "subsample_time");
  const Geometry5 g(x.shape());
  if (rate < 1 || g.t % rate != 0) {
    throw ArgumentError("subsample_time: rate " + std::to_string(rate) + " does not divide T=" +
                        std::to_string(g.t));
  }
  const int64_t hw = g.h * g.w;
  const int64_t out_t = g.t / rate;
  std::vector<double> out(static_cast<size_t>(g.n * g.c * out_t * hw));
  for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
    for (int64_t t = 0; t < out_t; ++t) {
      const double* src = x.ptr() + (pl * g.t + t * rate) * hw;
      std::copy(src, src + hw, out.begin() + (pl * out_t + t) * hw);
    }
  }
  return Tensor::make({g.n, g.c, out_t, g.h, g.w}, std::move(out), {x},
                      [g, hw, out_t, rate](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
                          for (int64_t t = 0; t < out_t; ++t) {
                            const double* src = self.grad.data() + (pl * out_t + t) * hw;
                            double* dst = gx.data() + (pl * g.t + t * rate) * hw;
                            for (int64_t i = 0; i < hw; ++i) dst[i] += src[i];
                          }
                        }
                      });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 5, "global_avg_pool");
  const Geometry5 g(x.shape());
  const int64_t inner = g.spatial();
  std::vector<double> out(static_cast<size_t>(g.n * g.c));
  for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
    double s = 0.0;
    const double* p = x.ptr() + pl * inner;
    for (int64_t i = 0; i < inner; ++i) s += p[i];
    out[pl] = s / static_cast<double>(inner);
  }
  return Tensor::make({g.n, g.c}, std::move(out), {x}, [inner](detail::Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (size_t pl = 0; pl < self.grad.size(); ++pl) {
      const double v = self.grad[pl] / static_cast<double>(inner);
      double* d = gx.data() + pl * inner;
      for (int64_t i = 0; i < inner; ++i) d[i] += v;
    }
  });
}

Tensor global_max_pool(const Tensor& x) {
  require_rank(x, 5, "global_max_pool");
  const Geometry5 g(x.shape());
  const int64_t inner = g.spatial();
  std::vector<double> out(static_cast<size_t>(g.n * g.c));
  std::vector<int64_t> argmax(out.size());
  for (int64_t pl = 0; pl < g.n * g.c; ++pl) {
    const double* p = x.ptr() + pl * inner;
    const auto best = std::max_element(p, p + inner) - p;
    out[pl] = p[best];
    argmax[pl] = pl * inner + best;
    if (g_recorder) g_recorder->record(static_cast<uint64_t>(best));
  }
  return Tensor::make({g.n, g.c}, std::move(out), {x},
                      [argmax = std::move(argmax)](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        for (size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
                      });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const int64_t n = parts.front().dim(0);
  int64_t total = 0;
  std::vector<int64_t> widths;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_channels");
    if (p.dim(0) != n) throw ShapeError("concat_channels: batch sizes differ");
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<double> out(static_cast<size_t>(n * total));
  int64_t offset = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    for (int64_t r = 0; r < n; ++r) {
      const double* src = parts[k].ptr() + r * widths[k];
      std::copy(src, src + widths[k], out.begin() + r * total + offset);
    }
    offset += widths[k];
  }
  return Tensor::make({n, total}, std::move(out), parts,
                      [n, total, widths](detail::Node& self) {
                        int64_t offset = 0;
                        for (size_t k = 0; k < widths.size(); ++k) {
                          auto& pn = *self.parents[k];
                          if (pn.requires_grad) {
                            auto& gp = pn.grad_buffer();
                            for (int64_t r = 0; r < n; ++r) {
                              for (int64_t j = 0; j < widths[k]; ++j) {
                                gp[r * widths[k] + j] += self.grad[r * total + offset + j];
                              }
                            }
                          }
                          offset += widths[k];
                        }
                      });
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ArgumentError("dropout: probability must be < 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  std::vector<double> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) {
    mask[i] = unif(rng) >= p ? keep_scale : 0.0;
    out[i] = x.ptr()[i] * mask[i];
  }
  return Tensor::make(x.shape(), std::move(out), {x}, [mask = std::move(mask)](detail::Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (size_t i = 0; i < mask.size(); ++i) gx[i] += self.grad[i] * mask[i];
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear weight");
  const int64_t n = x.dim(0), in = x.dim(1), out_f = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("linear: input width " + std::to_string(in) + " does not match weight " +
                     to_string(weight.shape()));
  }
  if (bias.defined() && bias.numel() != out_f) throw ShapeError("linear: bias width mismatch");
  std::vector<double> out(static_cast<size_t>(n * out_f));
  MapMat omat(out.data(), n, out_f);
  omat.noalias() = ConstMapMat(x.ptr(), n, in) * ConstMapMat(weight.ptr(), out_f, in).transpose();
  if (bias.defined()) {
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t j = 0; j < out_f; ++j) omat(r, j) += bias.data()[j];
    }
  }
  return Tensor::make({n, out_f}, std::move(out), {x, weight, bias},
                      [n, in, out_f](detail::Node& self) {
                        auto& xn = *self.parents[0];
                        auto& wn = *self.parents[1];
                        detail::Node* bn = self.parents[2].get();
                        ConstMapMat gout(self.grad.data(), n, out_f);
                        if (xn.requires_grad) {
                          MapMat(xn.grad_buffer().data(), n, in).noalias() +=
                              gout * ConstMapMat(wn.value.data(), out_f, in);
                        }
                        if (wn.requires_grad) {
                          MapMat(wn.grad_buffer().data(), out_f, in).noalias() +=
                              gout.transpose() * ConstMapMat(xn.value.data(), n, in);
                        }
                        if (bn && bn->requires_grad) {
                          auto& gb = bn->grad_buffer();
                          for (int64_t r = 0; r < n; ++r) {
                            for (int64_t j = 0; j < out_f; ++j) gb[j] += gout(r, j);
                          }
                        }
                      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != n) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(n));
  }
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw ArgumentError("cross_entropy: label " + std::to_string(label) + " out of range [0," +
                          std::to_string(k) + ")");
    }
  }
  std::vector<double> probs = softmax_rows(logits);
  double loss = 0.0;
  for (int64_t r = 0; r < n; ++r) {
    const double* row = logits.ptr() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    loss += (mx + std::log(z)) - row[labels[r]];
  }
  loss /= static_cast<double>(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return Tensor::make({1}, {loss}, {logits},
                      [n, k, probs = std::move(probs), lab = std::move(lab)](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        const double scale = self.grad[0] / static_cast<double>(n);
                        for (int64_t r = 0; r < n; ++r) {
                          for (int64_t j = 0; j < k; ++j) {
                            const double target = (j == lab[r]) ? 1.0 : 0.0;
                            gx[r * k + j] += scale * (probs[r * k + j] - target);
                          }
                        }
                      });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor fold_segments(const Tensor& x, int segments) {
  require_rank(x, 5, "fold_segments");
  if (segments < 1 || x.dim(0) % segments != 0 || x.dim(2) != 1) {
    throw ShapeError("fold_segments: cannot fold " + to_string(x.shape()) + " into " +
                     std::to_string(segments) + " segments");
  }
  const int64_t b = x.dim(0) / segments, c = x.dim(1), hw = x.dim(3) * x.dim(4);
  const int64_t s = segments;
  std::vector<double> out(x.numel());
  // in: (b*s + j, c, hw) -> out: (b, c, j, hw)
  for (int64_t bi = 0; bi < b; ++bi) {
    for (int64_t j = 0; j < s; ++j) {
      for (int64_t ci = 0; ci < c; ++ci) {
        const double* src = x.ptr() + ((bi * s + j) * c + ci) * hw;
        std::copy(src, src + hw, out.begin() + ((bi * c + ci) * s + j) * hw);
      }
    }
  }
  return Tensor::make({b, c, s, x.dim(3), x.dim(4)}, std::move(out), {x},
                      [b, c, s, hw](detail::Node& self) {
                        auto& gx = self.parents[0]->grad_buffer();
                        for (int64_t bi = 0; bi < b; ++bi) {
                          for (int64_t j = 0; j < s; ++j) {
                            for (int64_t ci = 0; ci < c; ++ci) {
                              const double* src = self.grad.data() + ((bi * c + ci) * s + j) * hw;
                              double* dst = gx.data() + ((bi * s + j) * c + ci) * hw;
                              for (int64_t i = 0; i < hw; ++i) dst[i] += src[i];
                            }
                          }
                        }
                      });
}

std::vector<double> softmax_rows(const Tensor& logits) {
  require_rank(logits, 2, "softmax_rows");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<double> out(static_cast<size_t>(n * k));
  for (int64_t r = 0; r < n; ++r) {
    const double* row = logits.ptr() + r * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      out[r * k + j] = std::exp(row[j] - mx);
      z += out[r * k + j];
    }
    for (int64_t j = 0; j < k; ++j) out[r * k + j] /= z;
  }
  return out;
}

}  // namespace tpn::nn
