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

#include "tpn/backbone.hpp"

#include <cmath>

#include "tpn/error.hpp"

namespace tpn::backbone {

namespace {

int conv_out(int in, int k, int s, int p) { return (in + 2 * p - k) / s + 1; }

void check_finite(const Tensor& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NumericError("backbone input contains non-finite values");
  }
}

}  // namespace

std::string to_string(BackboneKind kind) {
  return kind == BackboneKind::kConv3d ? "conv3d" : "conv2d_segments";
}

BackboneKind parse_backbone_kind(const std::string& text) {
  if (text == "conv3d") return BackboneKind::kConv3d;
  if (text == "conv2d_segments") return BackboneKind::kConv2dSegments;
  throw ConfigError("backbone.kind", "unknown backbone kind '" + text + "'");
}

BackboneSpec BackboneSpec::toy() { return {}; }

BackboneSpec BackboneSpec::toy_2d() {
  BackboneSpec s;
  s.kind = BackboneKind::kConv2dSegments;
  s.temporal_kernels = {1, 1, 1, 1};
  return s;
}

BackboneSpec BackboneSpec::resnet50_3d() {
  BackboneSpec s;
  s.depth_blocks = {3, 4, 6, 3};
  s.base_channels = 64;
  s.input_frames = 8;
  s.input_size = 224;
  return s;
}

void BackboneSpec::validate() const {
  if (depth_blocks.size() != 4) {
    throw ConfigError("backbone.depth_blocks",
                      "expected 4 entries, got " + std::to_string(depth_blocks.size()));
  }
  for (int d : depth_blocks) {
    if (d < 1) throw ConfigError("backbone.depth_blocks", "entries must be positive");
  }
  if (base_channels < 1) throw ConfigError("backbone.base_channels", "must be positive");
  if (temporal_kernels.size() != 4) {
    throw ConfigError("backbone.temporal_kernels",
                      "expected 4 entries, got " + std::to_string(temporal_kernels.size()));
  }
  for (int k : temporal_kernels) {
    if (k != 1 && k != 3) throw ConfigError("backbone.temporal_kernels", "entries must be 1 or 3");
    if (kind == BackboneKind::kConv2dSegments && k != 1) {
      throw ConfigError("backbone.temporal_kernels",
                        "conv2d_segments backbones use temporal kernel 1 everywhere");
    }
  }
  if (input_frames < 1) throw ConfigError("backbone.input_frames", "must be positive");
  if (input_size < 32 || input_size % 32 != 0) {
    throw ConfigError("backbone.input_size", "must be a positive multiple of 32");
  }
  if (in_channels < 1) throw ConfigError("backbone.in_channels", "must be positive");
}

int BackboneSpec::stage_channels(int stage_id) const {
  if (stage_id < 2 || stage_id > 5) {
    throw ConfigError("stage", "stage id " + std::to_string(stage_id) + " outside [2,5]");
  }
  return base_channels * (1 << (stage_id - 2)) * 4;
}

int BackboneSpec::stage_temporal_rf(int stage_id) const {
  int rf = 1;
  for (int s = 2; s <= stage_id; ++s) rf += depth_blocks[s - 2] * (temporal_kernels[s - 2] - 1);
  return rf;
}

const FeatureMap& StagePyramid::stage(int stage_id) const {
  for (const auto& level : levels) {
    if (level.stage_id == stage_id) return level;
  }
  throw ConfigError("tpn.stages", "stage res" + std::to_string(stage_id) + " not in pyramid");
}

void StagePyramid::check_invariants() const {
  for (size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    for (auto d : l.data.shape()) {
      if (d <= 0) throw ShapeError("feature map has non-positive dimension");
    }
    if (i > 0) {
      if (l.stage_id <= levels[i - 1].stage_id) throw ShapeError("stage ids not increasing");
      if (l.batch() != levels[0].batch()) throw ShapeError("pyramid levels disagree on batch");
      if (l.temporal_rf < levels[i - 1].temporal_rf) {
        throw ShapeError("temporal receptive field decreases with depth");
      }
    }
  }
}

std::vector<Shape> infer_stage_shapes(const BackboneSpec& spec, const Shape& input) {
  spec.validate();
  if (input.size() != 5) throw ShapeError("input must be rank 5, got " + nn::to_string(input));
  const bool segments = spec.kind == BackboneKind::kConv2dSegments;
  const int64_t batch = input[0];
  const int64_t time = segments ? input[1] : input[2];
  const int64_t channels = segments ? input[2] : input[1];
  if (channels != spec.in_channels) throw ShapeError("input channel count mismatch");
  int h = static_cast<int>(input[3]);
  int w = static_cast<int>(input[4]);
  h = conv_out(conv_out(h, 7, 2, 3), 3, 2, 1);
  w = conv_out(conv_out(w, 7, 2, 3), 3, 2, 1);
  std::vector<Shape> shapes;
  for (int stage = 2; stage <= 5; ++stage) {
    if (stage > 2) {
      h = conv_out(h, 3, 2, 1);
      w = conv_out(w, 3, 2, 1);
    }
    shapes.push_back({batch, spec.stage_channels(stage), time, h, w});
  }
  return shapes;
}

Tensor inflate_kernel(const Tensor& kernel2d, int t) {
  if (t < 1) throw ArgumentError("inflate_kernel: t must be >= 1, got " + std::to_string(t));
  if (kernel2d.rank() != 4) {
    throw ShapeError("inflate_kernel: expected (out, in, k, k), got " +
                     nn::to_string(kernel2d.shape()));
  }
  const auto& s = kernel2d.shape();
  const int64_t out_c = s[0], in_c = s[1], kh = s[2], kw = s[3];
  Tensor out({out_c, in_c, t, kh, kw});
  const int64_t plane = kh * kw;
  for (int64_t o = 0; o < out_c * in_c; ++o) {
    const double* src = kernel2d.ptr() + o * plane;
    for (int dt = 0; dt < t; ++dt) {
      double* dst = out.ptr() + (o * t + dt) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] / t;
    }
  }
  return out;
}

Tensor Backbone::Bottleneck::operator()(const Tensor& x, bool training) {
  Tensor y = c(b(a(x, training), training), training);
  Tensor identity = shortcut ? (*shortcut)(x, training) : x;
  return nn::relu(nn::add(y, identity));
}

void Backbone::Bottleneck::collect(nn::ParamList& out) const {
  a.collect(out);
  b.collect(out);
  c.collect(out);
  if (shortcut) shortcut->collect(out);
}

Backbone::Backbone(const BackboneSpec& spec, int num_classes, uint64_t seed, double head_dropout)
    : spec_(spec), num_classes_(num_classes) {
  spec_.validate();
  if (num_classes < 2) throw ConfigError("num_classes", "need at least 2 classes");
  const int base = spec_.base_channels;
  stem_ = nn::ConvNormAct("backbone.stem", seed, spec_.in_channels, base, {1, 7, 7}, {1, 2, 2},
                          {0, 3, 3});
  int in_c = base;
  for (int s = 0; s < 4; ++s) {
    const int planes = base << s;
    const int out_c = planes * 4;
    const int tk = spec_.temporal_kernels[s];
    std::vector<Bottleneck> blocks;
    for (int bi = 0; bi < spec_.depth_blocks[s]; ++bi) {
      const std::string name = "backbone.res" + std::to_string(s + 2) + "." + std::to_string(bi);
      const int stride = (bi == 0 && s > 0) ? 2 : 1;
      Bottleneck blk;
      blk.a = nn::ConvNormAct(name + ".a", seed, in_c, planes, {tk, 1, 1}, {1, 1, 1},
                              {tk / 2, 0, 0});
      blk.b = nn::ConvNormAct(name + ".b", seed, planes, planes, {1, 3, 3}, {1, stride, stride},
                              {0, 1, 1});
      blk.c = nn::ConvNormAct(name + ".c", seed, planes, out_c, {1, 1, 1}, {1, 1, 1}, {0, 0, 0},
                              /*act=*/false);
      if (in_c != out_c || stride != 1) {
        blk.shortcut = nn::ConvNormAct(name + ".shortcut", seed, in_c, out_c, {1, 1, 1},
                                       {1, stride, stride}, {0, 0, 0}, /*act=*/false);
      }
      blocks.push_back(std::move(blk));
      in_c = out_c;
    }
    stages_.push_back(std::move(blocks));
  }
  head_dropout_ = nn::Dropout("backbone.dropout", seed, head_dropout);
  fc_ = nn::Linear("backbone.fc", seed, in_c, num_classes);
}

StagePyramid Backbone::run(const Tensor& x, bool training, int input_side, int fold) {
  check_finite(x);
  if (input_side % 32 != 0) {
    throw ShapeError("spatial side " + std::to_string(input_side) + " is not divisible by 32");
  }
  if (x.dim(3) != x.dim(4)) throw ShapeError("frames must be square");
  Tensor h = stem_(x, training);
  h = nn::max_pool3d(h, {1, 3, 3}, {1, 2, 2}, {0, 1, 1});
  StagePyramid pyramid;
  for (int s = 0; s < 4; ++s) {
    for (auto& blk : stages_[s]) h = blk(h, training);
    FeatureMap fm;
    fm.data = fold > 0 ? nn::fold_segments(h, fold) : h;
    fm.stage_id = s + 2;
    fm.spatial_stride = input_side / static_cast<int>(h.dim(3));
    fm.temporal_rf = spec_.stage_temporal_rf(s + 2);
    pyramid.levels.push_back(std::move(fm));
  }
  return pyramid;
}

StagePyramid Backbone::forward_stages(const Tensor& clips, bool training) {
  if (clips.rank() != 5 || clips.dim(1) != spec_.in_channels) {
    throw ShapeError("forward_stages: expected (B," + std::to_string(spec_.in_channels) +
                     ",T,H,W), got " + nn::to_string(clips.shape()));
  }
  return run(clips, training, static_cast<int>(clips.dim(3)), 0);
}

StagePyramid Backbone::forward_stages_2d(const Tensor& segments, bool training) {
  if (segments.rank() != 5 || segments.dim(2) != spec_.in_channels) {
    throw ShapeError("forward_stages_2d: expected (B,S," + std::to_string(spec_.in_channels) +
                     ",H,W), got " + nn::to_string(segments.shape()));
  }
  const auto& s = segments.shape();
  const int count = static_cast<int>(s[1]);
  Tensor flat = nn::reshape(segments, {s[0] * s[1], s[2], 1, s[3], s[4]});
  return run(flat, training, static_cast<int>(s[3]), count);
}

StagePyramid Backbone::forward(const Tensor& input, bool training) {
  return spec_.kind == BackboneKind::kConv3d ? forward_stages(input, training)
                                             : forward_stages_2d(input, training);
}

Tensor Backbone::classify(const StagePyramid& pyramid, bool training) {
  Tensor pooled = nn::global_avg_pool(pyramid.stage(5).data);
  return fc_(head_dropout_(pooled, training));
}

nn::ParamList Backbone::parameters(bool include_head) const {
  nn::ParamList out;
  stem_.collect(out);
  for (const auto& stage : stages_) {
    for (const auto& blk : stage) blk.collect(out);
  }
  if (include_head) fc_.collect(out);
  return out;
}

}  // namespace tpn::backbone
