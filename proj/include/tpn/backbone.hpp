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

// Residual video backbones exposing the res2..res5 stage features.
//
// Stage widths follow the 4x bottleneck layout of the inflated ResNet-50:
// stage i (res_{i+1}) emits base_channels * 2^(i-1) * 4 channels and halves
// the spatial side from res3 on. There is no temporal downsampling anywhere.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tpn/layers.hpp"
#include "tpn/tensor.hpp"

namespace tpn::backbone {

using nn::Shape;
using nn::Tensor;

enum class BackboneKind { kConv3d, kConv2dSegments };

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone_kind(const std::string& text);

struct BackboneSpec {
  BackboneKind kind = BackboneKind::kConv3d;
  std::vector<int> depth_blocks{1, 1, 1, 1};
  int base_channels = 8;
  std::vector<int> temporal_kernels{1, 1, 3, 3};
  int input_frames = 8;
  int input_size = 32;
  int in_channels = 3;

  // Desk-scale default: base 8, one block per stage, 8x32x32 clips.
  static BackboneSpec toy();
  // Segment-based 2D variant of toy(): every temporal kernel is 1.
  static BackboneSpec toy_2d();
  // Full-width inflated ResNet-50 slow path at 8x224x224.
  static BackboneSpec resnet50_3d();

  // Throws ConfigError naming the offending field (prefixed "backbone.").
  void validate() const;

  // Output channels of res{stage_id}, stage_id in [2, 5].
  int stage_channels(int stage_id) const;
  // Temporal receptive field of res{stage_id} in clip frames.
  int stage_temporal_rf(int stage_id) const;
};

struct FeatureMap {
  Tensor data;  // (batch, channel, time, height, width)
  int stage_id = 0;
  int spatial_stride = 1;
  int temporal_rf = 1;

  int64_t batch() const { return data.dim(0); }
  int64_t channels() const { return data.dim(1); }
  int64_t time() const { return data.dim(2); }
  int64_t height() const { return data.dim(3); }
  int64_t width() const { return data.dim(4); }
};

struct StagePyramid {
  std::vector<FeatureMap> levels;  // ascending stage_id

  // Throws ConfigError when the stage is absent.
  const FeatureMap& stage(int stage_id) const;
  void check_invariants() const;
};

// Stage output shapes predicted from stride arithmetic alone. `input` is
// (B, C, T, H, W) for the 3D kind and (B, S, C, H, W) for the segment kind;
// results are always (B, C_i, T_i, H_i, W_i) for res2..res5.
std::vector<Shape> infer_stage_shapes(const BackboneSpec& spec, const Shape& input);

// 2D (out, in, k, k) kernel -> (out, in, t, k, k): t copies scaled by 1/t.
Tensor inflate_kernel(const Tensor& kernel2d, int t);

class Backbone {
 public:
  Backbone(const BackboneSpec& spec, int num_classes, uint64_t seed, double head_dropout = 0.5);

  // clips: (B, C, T, H, W).
  StagePyramid forward_stages(const Tensor& clips, bool training);
  // segments: (B, S, C, H, W); every segment runs through the shared 2D
  // network and the per-segment features are stacked along time.
  StagePyramid forward_stages_2d(const Tensor& segments, bool training);
  // Dispatches on spec().kind.
  StagePyramid forward(const Tensor& input, bool training);

  // Global average pool over res5 -> dropout -> fc.
  Tensor classify(const StagePyramid& pyramid, bool training);

  nn::ParamList parameters(bool include_head = true) const;
  void reseed(int epoch) { head_dropout_.reseed(epoch); }
  const BackboneSpec& spec() const { return spec_; }
  int num_classes() const { return num_classes_; }

 private:
  struct Bottleneck {
    nn::ConvNormAct a, b, c;
    std::optional<nn::ConvNormAct> shortcut;
    Tensor operator()(const Tensor& x, bool training);
    void collect(nn::ParamList& out) const;
  };

  StagePyramid run(const Tensor& x, bool training, int input_side, int fold);

  BackboneSpec spec_;
  int num_classes_;
  nn::ConvNormAct stem_;
  std::vector<std::vector<Bottleneck>> stages_;
  nn::Dropout head_dropout_;
  nn::Linear fc_;
};

}  // namespace tpn::backbone
