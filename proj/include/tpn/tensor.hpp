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

#pragma once

// Dense double-precision tensors with tape-based reverse-mode autodiff.
//
// Every op returns a fresh Tensor. When grad mode is on and any input
// requires grad, the result records its parents and a backward closure;
// Tensor::backward() walks that graph in reverse topological order.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tpn::nn {

using Shape = std::vector<int64_t>;

std::string to_string(const Shape& shape);
int64_t numel(const Shape& shape);

// (time, height, width) triple for kernels, strides and paddings.
struct Dims3 {
  int t = 1;
  int h = 1;
  int w = 1;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t dim(size_t i) const { return node_->shape.at(i); }
  size_t rank() const { return node_->shape.size(); }
  int64_t numel() const { return static_cast<int64_t>(node_->value.size()); }

  std::span<double> data() { return node_->value; }
  std::span<const double> data() const { return node_->value; }
  double* ptr() { return node_->value.data(); }
  const double* ptr() const { return node_->value.data(); }

  // Empty when no gradient has been accumulated yet.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    return *this;
  }

  double item() const;
  // Seeds d(self)/d(self) = 1 and accumulates into every reachable leaf.
  void backward();
  // Same storage-free copy of values, cut from the graph.
  Tensor detach() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Used by op implementations only.
  static Tensor make(Shape shape, std::vector<double> value,
                     std::vector<Tensor> parents,
                     std::function<void(detail::Node&)> backward);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Folds the branch taken by every piecewise-linear op (relu, max pooling)
// on this thread into one digest while alive. Two evaluations with equal
// digests lie in the same linear piece of all those ops.
class BranchRecorder {
 public:
  BranchRecorder();
  ~BranchRecorder();
  BranchRecorder(const BranchRecorder&) = delete;
  BranchRecorder& operator=(const BranchRecorder&) = delete;

  uint64_t digest() const { return digest_; }
  void reset() { digest_ = kOffset; }
  void record(uint64_t branch) { digest_ = (digest_ ^ branch) * 0x100000001b3ULL; }

 private:
  static constexpr uint64_t kOffset = 0xcbf29ce484222325ULL;
  uint64_t digest_ = kOffset;
  BranchRecorder* previous_;
};

// ---- ops -----------------------------------------------------------------

// x: (N, C, T, H, W); weight: (O, C, kt, kh, kw); bias: (O) or undefined.
Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Dims3 stride, Dims3 pad);

struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
};

// Per-channel normalization over (N, T, H, W). Training mode normalizes with
// batch statistics and updates the running estimates in place.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, bool training, double momentum = 0.1,
                  double eps = 1e-5);

Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
// a + scale * b, same shapes.
Tensor add_scaled(const Tensor& a, const Tensor& b, double scale);

// Max pooling over (T, H, W); padded cells never win.
Tensor max_pool3d(const Tensor& x, Dims3 kernel, Dims3 stride, Dims3 pad);

// Nearest-neighbour temporal upsampling: each time step repeated `factor` times.
Tensor repeat_time(const Tensor& x, int factor);
// Keeps time steps 0, rate, 2*rate, ...; T must be divisible by rate.
Tensor subsample_time(const Tensor& x, int rate);

// (N, C, T, H, W) -> (N, C)
Tensor global_avg_pool(const Tensor& x);
Tensor global_max_pool(const Tensor& x);

// Rank-2 (N, C_i) inputs concatenated along the channel axis.
Tensor concat_channels(const std::vector<Tensor>& parts);

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

// x: (N, I); weight: (O, I); bias: (O).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Mean cross-entropy over the batch.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

Tensor reshape(const Tensor& x, Shape shape);
// (N*S, C, 1, H, W) -> (N, C, S, H, W)
Tensor fold_segments(const Tensor& x, int segments);

// Row-wise softmax of a rank-2 tensor (no graph).
std::vector<double> softmax_rows(const Tensor& logits);

}  // namespace tpn::nn
