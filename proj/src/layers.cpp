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

#include "tpn/layers.hpp"

#include <cmath>

namespace tpn::nn {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Tensor leaf(Shape shape, double fill, bool trainable) {
  Tensor t(std::move(shape), fill);
  t.set_requires_grad(trainable);
  return t;
}

void fill_normal(Tensor& t, double stddev, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.data()) v = dist(rng);
}

}  // namespace

uint64_t derive_seed(uint64_t seed, std::string_view key) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed) ^ h);
}

int64_t count_trainable(const ParamList& params) {
  int64_t n = 0;
  for (const auto& p : params) {
    if (p.trainable) n += p.tensor.numel();
  }
  return n;
}

Conv3d::Conv3d(const std::string& name_, uint64_t seed, int in_channels, int out_channels,
               Dims3 kernel, Dims3 stride_, Dims3 pad_, bool with_bias)
    : name(name_), stride(stride_), pad(pad_) {
  weight = leaf({out_channels, in_channels, kernel.t, kernel.h, kernel.w}, 0.0, true);
  const double fan_out = static_cast<double>(out_channels) * kernel.t * kernel.h * kernel.w;
  fill_normal(weight, std::sqrt(2.0 / fan_out), derive_seed(seed, name + ".weight"));
  if (with_bias) bias = leaf({out_channels}, 0.0, true);
}

void Conv3d::collect(ParamList& out) const {
  out.push_back({name + ".weight", weight, true});
  if (bias.defined()) out.push_back({name + ".bias", bias, true});
}

BatchNorm3d::BatchNorm3d(const std::string& name_, int channels) : name(name_) {
  gamma = leaf({channels}, 1.0, true);
  beta = leaf({channels}, 0.0, true);
  stats.running_mean = leaf({channels}, 0.0, false);
  stats.running_var = leaf({channels}, 1.0, false);
}

void BatchNorm3d::collect(ParamList& out) const {
  out.push_back({name + ".weight", gamma, true});
  out.push_back({name + ".bias", beta, true});
  out.push_back({name + ".running_mean", stats.running_mean, false});
  out.push_back({name + ".running_var", stats.running_var, false});
}

Linear::Linear(const std::string& name_, uint64_t seed, int in_features, int out_features)
    : name(name_) {
  weight = leaf({out_features, in_features}, 0.0, true);
  fill_normal(weight, 0.01, derive_seed(seed, name + ".weight"));
  bias = leaf({out_features}, 0.0, true);
}

void Linear::collect(ParamList& out) const {
  out.push_back({name + ".weight", weight, true});
  out.push_back({name + ".bias", bias, true});
}

ConvNormAct::ConvNormAct(const std::string& name, uint64_t seed, int in_channels,
                         int out_channels, Dims3 kernel, Dims3 stride, Dims3 pad, bool act_)
    : conv(name + ".conv", seed, in_channels, out_channels, kernel, stride, pad),
      norm(name + ".bn", out_channels),
      act(act_) {}

Tensor ConvNormAct::operator()(const Tensor& x, bool training) {
  Tensor y = norm(conv(x), training);
  return act ? relu(y) : y;
}

void ConvNormAct::collect(ParamList& out) const {
  conv.collect(out);
  norm.collect(out);
}

}  // namespace tpn::nn
