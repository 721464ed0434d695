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

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tpn/tensor.hpp"

namespace tpn::nn {

// Stable 64-bit seed for a named stream, so that a parameter's initial value
// depends only on (seed, name) and not on construction order.
uint64_t derive_seed(uint64_t seed, std::string_view key);

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};
using ParamList = std::vector<NamedTensor>;

int64_t count_trainable(const ParamList& params);

class Conv3d {
 public:
  Conv3d() = default;
  // He (fan-out) normal init for the kernel, zero bias.
  Conv3d(const std::string& name, uint64_t seed, int in_channels, int out_channels, Dims3 kernel,
         Dims3 stride = {}, Dims3 pad = {0, 0, 0}, bool with_bias = false);

  Tensor operator()(const Tensor& x) const { return conv3d(x, weight, bias, stride, pad); }
  void collect(ParamList& out) const;

  std::string name;
  Tensor weight;
  Tensor bias;
  Dims3 stride;
  Dims3 pad{0, 0, 0};
};

class BatchNorm3d {
 public:
  BatchNorm3d() = default;
  BatchNorm3d(const std::string& name, int channels);

  Tensor operator()(const Tensor& x, bool training) {
    return batch_norm(x, gamma, beta, stats, training);
  }
  void collect(ParamList& out) const;

  std::string name;
  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;
};

class Linear {
 public:
  Linear() = default;
  // Normal(0, 0.01) weights, zero bias.
  Linear(const std::string& name, uint64_t seed, int in_features, int out_features);

  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(ParamList& out) const;

  std::string name;
  Tensor weight;
  Tensor bias;
};

// Owns its mask stream so that adding or removing other dropout sites never
// shifts the masks drawn here.
class Dropout {
 public:
  Dropout() = default;
  Dropout(const std::string& name, uint64_t seed, double p)
      : p_(p), seed_(derive_seed(seed, name)), rng_(seed_) {}

  // Restarts the mask stream at a per-epoch state so resumed runs draw the
  // same masks as uninterrupted ones.
  void reseed(int epoch) { rng_.seed(derive_seed(seed_, "epoch/" + std::to_string(epoch))); }

  Tensor operator()(const Tensor& x, bool training) { return dropout(x, p_, training, rng_); }
  double p() const { return p_; }

 private:
  double p_ = 0.0;
  uint64_t seed_ = 0;
  std::mt19937_64 rng_;
};

// conv -> norm -> optional relu
struct ConvNormAct {
  ConvNormAct() = default;
  ConvNormAct(const std::string& name, uint64_t seed, int in_channels, int out_channels,
              Dims3 kernel, Dims3 stride, Dims3 pad, bool act = true);
  Tensor operator()(const Tensor& x, bool training);
  void collect(ParamList& out) const;

  Conv3d conv;
  BatchNorm3d norm;
  bool act = true;
};

}  // namespace tpn::nn
