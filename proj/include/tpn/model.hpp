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
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tpn/backbone.hpp"
#include "tpn/pyramid.hpp"

namespace tpn {

// A backbone with either its own pooled classifier (baseline) or a temporal
// pyramid head.
struct ModelSpec {
  backbone::BackboneSpec backbone;
  std::optional<pyramid::PyramidConfig> tpn;
  int num_classes = 2;
  // Dropout in front of the baseline classifier.
  double dropout = 0.5;
  uint64_t seed = 0;
};

class Recognizer {
 public:
  explicit Recognizer(const ModelSpec& spec);

  struct Output {
    nn::Tensor logits;
    std::vector<nn::Tensor> aux_logits;
  };

  // input: (B, C, T, H, W) for conv3d backbones, (B, S, C, H, W) for
  // segment backbones.
  Output forward(const nn::Tensor& input, bool training);
  // Total objective: main cross-entropy plus lambda-weighted auxiliary terms.
  nn::Tensor loss(const Output& out, std::span<const int> labels) const;

  // Every tensor the model owns (trainable parameters and normalization
  // statistics) in a fixed order.
  nn::ParamList parameters() const;
  // Puts every dropout stream at its state for the start of `epoch`.
  void reseed(int epoch);
  const ModelSpec& spec() const { return spec_; }
  bool has_pyramid() const { return pyramid_ != nullptr; }
  backbone::Backbone& backbone() { return *backbone_; }
  pyramid::TemporalPyramid* pyramid() { return pyramid_.get(); }

 private:
  ModelSpec spec_;
  std::unique_ptr<backbone::Backbone> backbone_;
  std::unique_ptr<pyramid::TemporalPyramid> pyramid_;
};

}  // namespace tpn
