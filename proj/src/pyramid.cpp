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

#include "tpn/pyramid.hpp"

#include <algorithm>

#include "tpn/error.hpp"

namespace tpn::pyramid {

namespace {

void require_strictly_increasing(const std::vector<int>& v, const char* field) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) throw ConfigError(field, "must be strictly increasing");
  }
}

void require_aligned(const std::vector<Tensor>& levels) {
  const auto& ref = levels.front().shape();
  for (const auto& l : levels) {
    const auto& s = l.shape();
    if (s.size() != 5 || s[0] != ref[0] || s[1] != ref[1] || s[3] != ref[3] || s[4] != ref[4]) {
      throw ShapeError("aggregate: levels " + nn::to_string(ref) + " and " + nn::to_string(s) +
                       " are not aligned in batch, channels and space");
    }
  }
}

std::vector<Tensor> bottom_up(const std::vector<Tensor>& f) {
  std::vector<Tensor> out{f.front()};
  for (size_t i = 1; i < f.size(); ++i) {
    out.push_back(nn::add(f[i], resample_to(out[i - 1], f[i].dim(2))));
  }
  return out;
}

std::vector<Tensor> top_down(const std::vector<Tensor>& f) {
  std::vector<Tensor> out(f.size());
  out.back() = f.back();
  for (size_t i = f.size() - 1; i-- > 0;) {
    out[i] = nn::add(f[i], resample_to(out[i + 1], f[i].dim(2)));
  }
  return out;
}

std::vector<Tensor> parallel(const std::vector<Tensor>& f) {
  std::vector<Tensor> out;
  for (size_t i = 0; i < f.size(); ++i) {
    Tensor acc = f[i];
    if (i > 0) acc = nn::add(acc, resample_to(f[i - 1], f[i].dim(2)));
    if (i + 1 < f.size()) acc = nn::add(acc, resample_to(f[i + 1], f[i].dim(2)));
    out.push_back(acc);
  }
  return out;
}

}  // namespace

std::string to_string(FlowKind flow) {
  switch (flow) {
    case FlowKind::kIsolation: return "isolation";
    case FlowKind::kBottomUp: return "bottom_up";
    case FlowKind::kTopDown: return "top_down";
    case FlowKind::kCascade: return "cascade";
    case FlowKind::kParallel: return "parallel";
  }
  return "?";
}

FlowKind parse_flow(const std::string& text) {
  for (FlowKind f : kAllFlows) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("tpn.flow", "unknown flow '" + text + "'");
}

std::string to_string(SourceMode mode) {
  return mode == SourceMode::kSingleDepth ? "single_depth" : "multi_depth";
}

SourceMode parse_source_mode(const std::string& text) {
  if (text == "single_depth") return SourceMode::kSingleDepth;
  if (text == "multi_depth") return SourceMode::kMultiDepth;
  throw ConfigError("tpn.source_mode", "unknown source mode '" + text + "'");
}

int PyramidConfig::levels() const {
  return static_cast<int>(source_mode == SourceMode::kMultiDepth ? stages.size() : rates.size());
}

void PyramidConfig::validate() const {
  for (int s : stages) {
    if (s < 2 || s > 5) throw ConfigError("tpn.stages", "stage ids must lie in [2,5]");
  }
  if (source_mode == SourceMode::kMultiDepth) {
    if (stages.empty()) throw ConfigError("tpn.stages", "need at least one source stage");
    require_strictly_increasing(stages, "tpn.stages");
  } else {
    if (stages.size() != 1) throw ConfigError("tpn.stages", "single_depth takes exactly one stage");
    if (rates.empty()) throw ConfigError("tpn.rates", "single_depth needs at least one rate");
    for (int r : rates) {
      if (r < 1) throw ConfigError("tpn.rates", "rates must be positive");
    }
    require_strictly_increasing(rates, "tpn.rates");
  }
  const auto m = static_cast<size_t>(levels());
  if (alphas.size() != m) {
    throw ConfigError("tpn.alphas", "expected " + std::to_string(m) + " entries, got " +
                                        std::to_string(alphas.size()));
  }
  for (int a : alphas) {
    if (a < 1) throw ConfigError("tpn.alphas", "entries must be positive");
  }
  if (lambdas.size() != m - 1) {
    throw ConfigError("tpn.lambdas", "expected " + std::to_string(m - 1) + " entries, got " +
                                         std::to_string(lambdas.size()));
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ConfigError("tpn.lambdas", "entries must be non-negative");
  }
  if (mod_channels < 0) throw ConfigError("tpn.mod_channels", "must be positive (0 = auto)");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("tpn.dropout", "must lie in [0,1)");
}

void PyramidConfig::validate_against(const backbone::BackboneSpec& spec, int64_t frames) const {
  validate();
  const int m = levels();
  for (int i = 0; i < m; ++i) {
    int64_t t = frames;
    if (source_mode == SourceMode::kSingleDepth) {
      if (frames % rates[i] != 0) {
        throw ConfigError("tpn.rates", "rate " + std::to_string(rates[i]) +
                                           " does not divide T=" + std::to_string(frames));
      }
      t = frames / rates[i];
    }
    if (temporal_modulation && t % alphas[i] != 0) {
      throw ConfigError("tpn.alphas", "alpha " + std::to_string(alphas[i]) +
                                          " does not divide level time " + std::to_string(t));
    }
  }
  (void)spec.stage_channels(stages.back());
}

int PyramidConfig::resolved_mod_channels(const backbone::BackboneSpec& spec) const {
  return mod_channels > 0 ? mod_channels : spec.stage_channels(stages.back()) / 2;
}

std::vector<int> PyramidConfig::source_channels(const backbone::BackboneSpec& spec) const {
  std::vector<int> out;
  if (source_mode == SourceMode::kMultiDepth) {
    for (int s : stages) out.push_back(spec.stage_channels(s));
  } else {
    out.assign(rates.size(), spec.stage_channels(stages.front()));
  }
  return out;
}

Tensor g_resample(const Tensor& feature, Ratio delta) {
  if (delta.num <= 0 || delta.den <= 0) throw ArgumentError("g_resample: factor must be positive");
  if (delta.num == delta.den) return feature;
  if (delta.num > delta.den) {
    if (delta.num % delta.den != 0) {
      throw ArgumentError("g_resample: non-integral upsampling factor " + std::to_string(delta.num) +
                          "/" + std::to_string(delta.den));
    }
    return nn::repeat_time(feature, static_cast<int>(delta.num / delta.den));
  }
  if (delta.den % delta.num != 0) {
    throw ArgumentError("g_resample: non-integral downsampling factor " +
                        std::to_string(delta.num) + "/" + std::to_string(delta.den));
  }
  const int window = static_cast<int>(delta.den / delta.num);
  if (feature.dim(2) % window != 0) {
    throw ArgumentError("g_resample: window " + std::to_string(window) + " does not divide T=" +
                        std::to_string(feature.dim(2)));
  }
  return nn::max_pool3d(feature, {window, 1, 1}, {window, 1, 1}, {0, 0, 0});
}

Tensor resample_to(const Tensor& feature, int64_t target_time) {
  return g_resample(feature, {target_time, feature.dim(2)});
}

std::vector<Tensor> aggregate(const std::vector<Tensor>& levels, FlowKind flow) {
  if (levels.empty()) throw ShapeError("aggregate: empty pyramid");
  require_aligned(levels);
  switch (flow) {
    case FlowKind::kIsolation: return levels;
    case FlowKind::kBottomUp: return bottom_up(levels);
    case FlowKind::kTopDown: return top_down(levels);
    case FlowKind::kCascade: return bottom_up(top_down(levels));
    case FlowKind::kParallel: return parallel(levels);
  }
  return levels;
}

std::vector<FeatureMap> aggregate(const std::vector<FeatureMap>& levels, FlowKind flow) {
  std::vector<Tensor> data;
  for (const auto& l : levels) data.push_back(l.data);
  auto merged = aggregate(data, flow);
  std::vector<FeatureMap> out = levels;
  for (size_t i = 0; i < out.size(); ++i) out[i].data = merged[i];
  return out;
}

std::vector<FeatureMap> collect_sources(const StagePyramid& pyramid, const PyramidConfig& cfg) {
  cfg.validate();
  std::vector<FeatureMap> out;
  if (cfg.source_mode == SourceMode::kMultiDepth) {
    for (int s : cfg.stages) out.push_back(pyramid.stage(s));
    return out;
  }
  const FeatureMap& base = pyramid.stage(cfg.stages.front());
  for (int r : cfg.rates) {
    if (base.time() % r != 0) {
      throw ConfigError("tpn.rates", "rate " + std::to_string(r) + " does not divide T=" +
                                         std::to_string(base.time()));
    }
    FeatureMap level = base;
    if (r != 1) level.data = nn::subsample_time(base.data, r);
    out.push_back(std::move(level));
  }
  return out;
}

Tensor total_loss(const Tensor& main_logits, const std::vector<Tensor>& aux_logits,
                  std::span<const int> labels, std::span<const double> lambdas) {
  if (aux_logits.size() != lambdas.size()) {
    throw ArgumentError("total_loss: " + std::to_string(aux_logits.size()) + " auxiliary heads but " +
                        std::to_string(lambdas.size()) + " coefficients");
  }
  Tensor loss = nn::cross_entropy(main_logits, labels);
  for (size_t i = 0; i < aux_logits.size(); ++i) {
    loss = nn::add_scaled(loss, nn::cross_entropy(aux_logits[i], labels), lambdas[i]);
  }
  return loss;
}

TemporalPyramid::TemporalPyramid(const PyramidConfig& cfg, const backbone::BackboneSpec& spec,
                                 int num_classes, uint64_t seed)
    : cfg_(cfg), mod_channels_(cfg.resolved_mod_channels(spec)) {
  cfg_.validate();
  const int m = cfg_.levels();
  const auto channels = cfg_.source_channels(spec);
  const bool multi = cfg_.source_mode == SourceMode::kMultiDepth;
  for (int i = 0; i < m; ++i) {
    const std::string name = "tpn.level" + std::to_string(i);
    LevelModules lv;
    const int convs = (multi && cfg_.spatial_convs) ? m - 1 - i : 0;
    for (int k = 0; k < convs; ++k) {
      lv.downsample.emplace_back(name + ".down" + std::to_string(k), seed, channels[i],
                                 channels[i], nn::Dims3{1, 3, 3}, nn::Dims3{1, 2, 2},
                                 nn::Dims3{0, 1, 1});
    }
    lv.project = nn::ConvNormAct(name + ".project", seed, channels[i], mod_channels_, {1, 1, 1},
                                 {1, 1, 1}, {0, 0, 0}, true);
    if (cfg_.temporal_modulation) {
      lv.temporal = nn::Conv3d(name + ".temporal", seed, mod_channels_, mod_channels_, {3, 1, 1},
                               {1, 1, 1}, {1, 0, 0});
    }
    if (cfg_.aux_heads && i + 1 < m) {
      lv.aux_fc = nn::Linear(name + ".aux_fc", seed, mod_channels_, num_classes);
      lv.aux_dropout = nn::Dropout(name + ".aux_dropout", seed, cfg_.dropout);
    }
    levels_.push_back(std::move(lv));
  }
  head_dropout_ = nn::Dropout("tpn.dropout", seed, cfg_.dropout);
  fc_ = nn::Linear("tpn.fc", seed, m * mod_channels_, num_classes);
}

std::vector<FeatureMap> TemporalPyramid::spatial_modulate(const std::vector<FeatureMap>& sources,
                                                          bool training) {
  const int m = static_cast<int>(sources.size());
  if (m != static_cast<int>(levels_.size())) {
    throw ShapeError("spatial_modulate: expected " + std::to_string(levels_.size()) +
                     " levels, got " + std::to_string(m));
  }
  const auto& top = sources.back();
  const bool multi = cfg_.source_mode == SourceMode::kMultiDepth;
  std::vector<FeatureMap> out;
  for (int i = 0; i < m; ++i) {
    const auto& src = sources[i];
    const int64_t scale = multi ? (int64_t{1} << (m - 1 - i)) : 1;
    if (src.height() != top.height() * scale || src.width() != top.width() * scale) {
      throw ShapeError("spatial_modulate: level " + std::to_string(i) + " is " +
                       std::to_string(src.height()) + "x" + std::to_string(src.width()) +
                       ", expected top size x" + std::to_string(scale));
    }
    Tensor h = src.data;
    if (!levels_[i].downsample.empty()) {
      for (auto& conv : levels_[i].downsample) h = conv(h, training);
    } else if (scale > 1) {
      const int k = static_cast<int>(scale);
      h = nn::max_pool3d(h, {1, k, k}, {1, k, k}, {0, 0, 0});
    }
    FeatureMap fm = src;
    fm.data = levels_[i].project(h, training);
    out.push_back(std::move(fm));
  }
  return out;
}

std::vector<Tensor> TemporalPyramid::aux_head_logits(const std::vector<FeatureMap>& modulated,
                                                     bool training) {
  std::vector<Tensor> out;
  for (size_t i = 0; i + 1 < modulated.size(); ++i) {
    auto& lv = levels_.at(i);
    if (!lv.aux_fc) continue;
    out.push_back((*lv.aux_fc)(lv.aux_dropout(nn::global_avg_pool(modulated[i].data), training)));
  }
  return out;
}

std::vector<FeatureMap> TemporalPyramid::temporal_modulate(const std::vector<FeatureMap>& modulated,
                                                           bool training) {
  (void)training;
  if (!cfg_.temporal_modulation) return modulated;
  std::vector<FeatureMap> out;
  for (size_t i = 0; i < modulated.size(); ++i) {
    const int alpha = cfg_.alphas.at(i);
    if (modulated[i].time() % alpha != 0) {
      throw ConfigError("tpn.alphas", "alpha " + std::to_string(alpha) +
                                          " does not divide level time " +
                                          std::to_string(modulated[i].time()));
    }
    FeatureMap fm = modulated[i];
    Tensor h = levels_[i].temporal(fm.data);
    if (alpha > 1) h = nn::max_pool3d(h, {alpha, 1, 1}, {alpha, 1, 1}, {0, 0, 0});
    fm.data = h;
    out.push_back(std::move(fm));
  }
  return out;
}

Tensor TemporalPyramid::predict(const std::vector<FeatureMap>& aggregated, bool training) {
  if (aggregated.empty()) throw ShapeError("predict: empty pyramid");
  std::vector<Tensor> pooled;
  for (const auto& level : aggregated) pooled.push_back(nn::global_max_pool(level.data));
  Tensor features = pooled.size() == 1 ? pooled.front() : nn::concat_channels(pooled);
  return fc_(head_dropout_(features, training));
}

TPNOutput TemporalPyramid::forward(const StagePyramid& pyramid, bool training) {
  TPNOutput out;
  auto sources = collect_sources(pyramid, cfg_);
  auto modulated = spatial_modulate(sources, training);
  out.aux_logits = aux_head_logits(modulated, training);
  auto rated = temporal_modulate(modulated, training);
  out.aggregated = aggregate(rated, cfg_.flow);
  out.main_logits = predict(out.aggregated, training);
  return out;
}

void TemporalPyramid::reseed(int epoch) {
  for (auto& lv : levels_) lv.aux_dropout.reseed(epoch);
  head_dropout_.reseed(epoch);
}

nn::ParamList TemporalPyramid::parameters() const {
  nn::ParamList out;
  for (const auto& lv : levels_) {
    for (const auto& d : lv.downsample) d.collect(out);
    lv.project.collect(out);
    if (lv.temporal.weight.defined()) lv.temporal.collect(out);
    if (lv.aux_fc) lv.aux_fc->collect(out);
  }
  fc_.collect(out);
  return out;
}

}  // namespace tpn::pyramid
