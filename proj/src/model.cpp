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

#include "tpn/model.hpp"

#include "tpn/error.hpp"

namespace tpn {

Recognizer::Recognizer(const ModelSpec& spec) : spec_(spec) {
  if (!(spec_.dropout >= 0.0 && spec_.dropout < 1.0)) {
    throw ConfigError("train.dropout", "must lie in [0,1)");
  }
  backbone_ = std::make_unique<backbone::Backbone>(spec_.backbone, spec_.num_classes, spec_.seed,
                                                   spec_.dropout);
  if (spec_.tpn) {
    pyramid_ = std::make_unique<pyramid::TemporalPyramid>(*spec_.tpn, spec_.backbone,
                                                          spec_.num_classes, spec_.seed);
  }
}

void Recognizer::reseed(int epoch) {
  backbone_->reseed(epoch);
  if (pyramid_) pyramid_->reseed(epoch);
}

Recognizer::Output Recognizer::forward(const nn::Tensor& input, bool training) {
  auto stages = backbone_->forward(input, training);
  Output out;
  if (!pyramid_) {
    out.logits = backbone_->classify(stages, training);
    return out;
  }
  auto res = pyramid_->forward(stages, training);
  out.logits = res.main_logits;
  out.aux_logits = std::move(res.aux_logits);
  return out;
}

nn::Tensor Recognizer::loss(const Output& out, std::span<const int> labels) const {
  std::span<const double> lambdas;
  if (pyramid_ && pyramid_->config().aux_heads) lambdas = pyramid_->config().lambdas;
  return pyramid::total_loss(out.logits, out.aux_logits, labels, lambdas);
}

nn::ParamList Recognizer::parameters() const {
  auto params = backbone_->parameters(/*include_head=*/pyramid_ == nullptr);
  if (pyramid_) {
    auto extra = pyramid_->parameters();
    params.insert(params.end(), extra.begin(), extra.end());
  }
  return params;
}

}  // namespace tpn
