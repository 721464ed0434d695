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

// Temporal feature pyramid on top of a backbone's stage features:
//
//   collect_sources -> spatial_modulate (+ auxiliary heads)
//                   -> temporal_modulate -> aggregate -> predict
//
// Levels are always ordered bottom (shallowest / finest time) to top.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpn/backbone.hpp"
#include "tpn/layers.hpp"

namespace tpn::pyramid {

using backbone::FeatureMap;
using backbone::StagePyramid;
using nn::Tensor;

enum class FlowKind { kIsolation, kBottomUp, kTopDown, kCascade, kParallel };
enum class SourceMode { kSingleDepth, kMultiDepth };

std::string to_string(FlowKind flow);
FlowKind parse_flow(const std::string& text);
std::string to_string(SourceMode mode);
SourceMode parse_source_mode(const std::string& text);
inline constexpr FlowKind kAllFlows[] = {FlowKind::kIsolation, FlowKind::kBottomUp,
                                         FlowKind::kTopDown, FlowKind::kCascade,
                                         FlowKind::kParallel};

struct PyramidConfig {
  SourceMode source_mode = SourceMode::kMultiDepth;
  // multi_depth: stage ids, strictly increasing. single_depth: exactly one id.
  std::vector<int> stages{4, 5};
  // single_depth only: temporal sampling rates r_1 < ... < r_M.
  std::vector<int> rates;
  std::vector<int> alphas{4, 8};
  FlowKind flow = FlowKind::kParallel;
  // Width every level is projected to; 0 selects half the top stage width.
  int mod_channels = 0;
  std::vector<double> lambdas{0.5};
  double dropout = 0.5;

  // Component switches used by the ablation grid.
  bool aux_heads = true;
  bool spatial_convs = true;
  bool temporal_modulation = true;

  int levels() const;
  // Field-level checks; throws ConfigError("tpn.<field>", ...).
  void validate() const;
  // Cross-checks against the backbone and clip length T.
  void validate_against(const backbone::BackboneSpec& spec, int64_t frames) const;
  int resolved_mod_channels(const backbone::BackboneSpec& spec) const;
  // Channel count of every source level before modulation.
  std::vector<int> source_channels(const backbone::BackboneSpec& spec) const;
};

// Temporal resampling factor T_target / T_source.
struct Ratio {
  int64_t num = 1;
  int64_t den = 1;
};

// delta < 1: temporal max pool with window 1/delta; delta > 1: nearest
// repeat by delta; delta == 1: the input itself. Throws ArgumentError unless
// delta or 1/delta is an integer.
Tensor g_resample(const Tensor& feature, Ratio delta);
// g_resample with delta = target_time / feature time.
Tensor resample_to(const Tensor& feature, int64_t target_time);

// Information flow over aligned levels (same batch, channels and spatial
// size). BottomUp and TopDown sweep over already-aggregated levels; Cascade
// is BottomUp applied to the TopDown result; Parallel adds both
// un-aggregated neighbours in one step.
std::vector<Tensor> aggregate(const std::vector<Tensor>& levels, FlowKind flow);
std::vector<FeatureMap> aggregate(const std::vector<FeatureMap>& levels, FlowKind flow);

std::vector<FeatureMap> collect_sources(const StagePyramid& pyramid, const PyramidConfig& cfg);

// L_main + sum_i lambda_i * L_aux_i, each a batch-mean cross-entropy.
Tensor total_loss(const Tensor& main_logits, const std::vector<Tensor>& aux_logits,
                  std::span<const int> labels, std::span<const double> lambdas);

struct TPNOutput {
  Tensor main_logits;
  std::vector<Tensor> aux_logits;
  std::vector<FeatureMap> aggregated;
};

class TemporalPyramid {
 public:
  TemporalPyramid(const PyramidConfig& cfg, const backbone::BackboneSpec& spec, int num_classes,
                  uint64_t seed);

  std::vector<FeatureMap> spatial_modulate(const std::vector<FeatureMap>& sources, bool training);
  std::vector<Tensor> aux_head_logits(const std::vector<FeatureMap>& modulated, bool training);
  std::vector<FeatureMap> temporal_modulate(const std::vector<FeatureMap>& modulated,
                                            bool training);
  // Per-level global max pool, channel concat, dropout, fc.
  Tensor predict(const std::vector<FeatureMap>& aggregated, bool training);

  TPNOutput forward(const StagePyramid& pyramid, bool training);

  nn::ParamList parameters() const;
  void reseed(int epoch);
  const PyramidConfig& config() const { return cfg_; }
  int mod_channels() const { return mod_channels_; }

 private:
  struct LevelModules {
    std::vector<nn::ConvNormAct> downsample;
    nn::ConvNormAct project;
    nn::Conv3d temporal;
    std::optional<nn::Linear> aux_fc;
    nn::Dropout aux_dropout;
  };

  PyramidConfig cfg_;
  int mod_channels_;
  std::vector<LevelModules> levels_;
  nn::Dropout head_dropout_;
  nn::Linear fc_;
};

}  // namespace tpn::pyramid
