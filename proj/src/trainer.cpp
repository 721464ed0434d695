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

#include "tpn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "tpn/error.hpp"
#include "tpn/layers.hpp"

namespace tpn::train {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr", "must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum", "must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay", "must be >= 0");
  if (epochs < 0) throw ConfigError("train.epochs", "must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train.dropout", "must lie in [0,1)");
  for (size_t i = 0; i < milestones.size(); ++i) {
    if (i > 0 && milestones[i] <= milestones[i - 1]) {
      throw ConfigError("train.milestones", "must be strictly increasing");
    }
    if (milestones[i] < 0 || milestones[i] >= std::max(epochs, 1)) {
      throw ConfigError("train.milestones", "must lie in [0, epochs)");
    }
  }
}

double lr_at(const TrainConfig& cfg, int epoch) {
  const auto decays = std::count_if(cfg.milestones.begin(), cfg.milestones.end(),
                                    [epoch](int m) { return m <= epoch; });
  return cfg.lr * std::pow(10.0, -static_cast<double>(decays));
}

// ---- SGD ---------------------------------------------------------------------------

SGD::SGD(nn::ParamList params, double momentum, double weight_decay)
    : momentum_(momentum), weight_decay_(weight_decay) {
  for (auto& p : params) {
    if (!p.trainable) continue;
    velocity_.emplace_back(p.tensor.shape(), 0.0);
    params_.push_back(std::move(p));
  }
}

void SGD::step(double lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].tensor.data();
    auto v = velocity_[i].data();
    const auto g = params_[i].tensor.grad();
    const bool has_grad = !g.empty();
    for (size_t k = 0; k < w.size(); ++k) {
      const double d = (has_grad ? g[k] : 0.0) + weight_decay_ * w[k];
      v[k] = momentum_ * v[k] + d;
      w[k] -= lr * v[k];
    }
  }
}

void SGD::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

nn::ParamList SGD::state() const {
  nn::ParamList out;
  for (size_t i = 0; i < params_.size(); ++i) {
    out.push_back({params_[i].name + ".momentum", velocity_[i], false});
  }
  return out;
}

// ---- input pipeline ----------------------------------------------------------------

data::Frames InputPipeline::train_view(const data::VideoRecord& video, std::mt19937_64& rng) const {
  data::Frames clip = scheme.mode == data::SampleMode::kWindowed
                          ? data::sample_clip(video, scheme, std::nullopt, &rng)
                          : data::sample_segments(video, scheme.num_segments, true, &rng);
  return data::random_crop_flip(clip, crop_size, flip, rng);
}

data::Frames InputPipeline::eval_clip(const data::VideoRecord& video, int k, int count) const {
  const int len = video.frames.time;
  if (scheme.mode == data::SampleMode::kWindowed) {
    return data::sample_clip(video, scheme, data::eval_clip_start(len, scheme, k, count));
  }
  if (count < 1 || k < 0 || k >= count) throw ArgumentError("clip index out of range");
  const int n = scheme.num_segments;
  if (len < n) throw DataError(video.id + ": shorter than the segment count");
  std::vector<int> idx(n);
  const double offset = (k + 0.5) / count;
  for (int i = 0; i < n; ++i) idx[i] = static_cast<int>(std::floor((i + offset) * len / n));
  return data::select_frames(video.frames, idx);
}

// ---- training ----------------------------------------------------------------------

json to_json(const EpochStats& stats) {
  json j = {{"epoch", stats.epoch}, {"lr", stats.lr}, {"train_loss", stats.train_loss}};
  j["val_top1"] = stats.val_top1 ? json(*stats.val_top1) : json(nullptr);
  return j;
}

void append_history(const std::filesystem::path& path, const EpochStats& stats) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError(path.string(), "cannot open for append");
  out << to_json(stats).dump() << '\n';
}

TrainResult train(Recognizer& model, SGD& optimizer, const data::Dataset& dataset,
                  const TrainConfig& cfg, const InputPipeline& pipeline,
                  const TrainOptions& options) {
  cfg.validate();
  if (dataset.videos.empty()) throw ArgumentError("training set is empty");
  if (dataset.num_classes != model.spec().num_classes) {
    throw ConfigError("data.num_classes", "dataset has " + std::to_string(dataset.num_classes) +
                                              " classes, model " +
                                              std::to_string(model.spec().num_classes));
  }
  TrainResult result;
  const int n = static_cast<int>(dataset.videos.size());
  std::vector<int> order(n);
  for (int epoch = options.start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    const std::string tag = std::to_string(epoch);
    std::mt19937_64 shuffle_rng(nn::derive_seed(cfg.seed, "shuffle/" + tag));
    std::mt19937_64 augment_rng(nn::derive_seed(cfg.seed, "augment/" + tag));
    model.reseed(epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(n, begin + cfg.batch_size);
      std::vector<data::Frames> views;
      std::vector<int> labels;
      for (int i = begin; i < end; ++i) {
        const auto& video = dataset.videos[order[i]];
        views.push_back(pipeline.train_view(video, augment_rng));
        labels.push_back(video.class_id);
      }
      const nn::Tensor input = data::to_input(views, pipeline.kind);
      optimizer.zero_grad();
      const auto out = model.forward(input, /*training=*/true);
      nn::Tensor loss = model.loss(out, labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + tag + " (lr " +
                           std::to_string(lr) + ")");
      }
      loss.backward();
      optimizer.step(lr);
      result.step_losses.push_back(value);
      loss_sum += value * (end - begin);
    }

    EpochStats stats{epoch, lr, loss_sum / n, std::nullopt};
    if (options.val != nullptr) {
      stats.val_top1 =
          evaluate(model, *options.val, pipeline, options.val_crop, options.val_clips).top1;
    }
    result.history.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
  }
  return result;
}

// ---- evaluation ----------------------------------------------------------------------

json to_json(const EvalReport& report) {
  json per_class = json::object();
  for (const auto& [cls, acc] : report.per_class_top1) per_class[std::to_string(cls)] = acc;
  return {{"top1", report.top1},
          {"top5", report.top5},
          {"per_class_top1", per_class},
          {"num_samples", report.num_samples}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.top1 = j.at("top1").get<double>();
    r.top5 = j.at("top5").get<double>();
    r.num_samples = j.at("num_samples").get<int>();
    for (const auto& [key, value] : j.at("per_class_top1").items()) {
      r.per_class_top1[std::stoi(key)] = value.get<double>();
    }
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

EvalReport evaluate(Recognizer& model, const data::Dataset& dataset, const InputPipeline& pipeline,
                    data::CropProtocol protocol, int clips_per_video, int batch_size) {
  if (dataset.videos.empty()) throw ArgumentError("evaluation set is empty");
  if (clips_per_video < 1) throw ConfigError("eval.clips_per_video", "must be at least 1");
  const int classes = model.spec().num_classes;
  nn::NoGradGuard no_grad;

  EvalReport report;
  report.probabilities.assign(dataset.videos.size(), std::vector<double>(classes, 0.0));
  // Views are queued across videos and flushed in batches; eval-mode
  // normalization makes every row independent of its batch mates.
  std::vector<data::Frames> views;
  std::vector<size_t> owner;
  auto flush = [&] {
    if (views.empty()) return;
    const auto out = model.forward(data::to_input(views, pipeline.kind), /*training=*/false);
    const auto probs = nn::softmax_rows(out.logits);
    for (size_t r = 0; r < owner.size(); ++r) {
      auto& acc = report.probabilities[owner[r]];
      for (int c = 0; c < classes; ++c) acc[c] += probs[r * classes + c];
    }
    views.clear();
    owner.clear();
  };
  std::vector<int> views_per_video(dataset.videos.size(), 0);
  for (size_t v = 0; v < dataset.videos.size(); ++v) {
    const auto& video = dataset.videos[v];
    if (video.class_id < 0 || video.class_id >= classes) {
      throw DataError(video.id + ": label outside the model's classes");
    }
    for (int k = 0; k < clips_per_video; ++k) {
      for (auto& view : data::crop_protocol(pipeline.eval_clip(video, k, clips_per_video), protocol,
                                            pipeline.crop_size)) {
        views.push_back(std::move(view));
        owner.push_back(v);
        ++views_per_video[v];
      }
    }
    if (static_cast<int>(views.size()) >= batch_size) flush();
  }
  flush();

  const int k5 = std::min(5, classes);
  std::map<int, std::pair<int, int>> per_class;  // correct, total
  int hit1 = 0, hit5 = 0;
  for (size_t v = 0; v < dataset.videos.size(); ++v) {
    auto& p = report.probabilities[v];
    for (double& x : p) x /= views_per_video[v];
    const int label = dataset.videos[v].class_id;
    // Rank of the true class; ties go to the lower class index.
    int rank = 0;
    for (int c = 0; c < classes; ++c) {
      if (p[c] > p[label] || (p[c] == p[label] && c < label)) ++rank;
    }
    hit1 += rank == 0;
    hit5 += rank < k5;
    auto& pc = per_class[label];
    pc.first += rank == 0;
    pc.second += 1;
  }
  const double n = static_cast<double>(dataset.videos.size());
  report.top1 = hit1 / n;
  report.top5 = hit5 / n;
  report.num_samples = static_cast<int>(dataset.videos.size());
  for (const auto& [cls, counts] : per_class) {
    report.per_class_top1[cls] = static_cast<double>(counts.first) / counts.second;
  }
  return report;
}

// ---- gradient check --------------------------------------------------------------------

GradcheckResult gradcheck(const std::function<nn::Tensor()>& loss, const nn::ParamList& params,
                          double step, int64_t max_coords, uint64_t seed) {
  if (!(step > 0.0)) throw ArgumentError("gradcheck step must be positive");
  nn::ParamList trainable;
  for (const auto& p : params) {
    if (p.trainable) trainable.push_back(p);
  }
  for (auto& p : trainable) p.tensor.zero_grad();
  nn::BranchRecorder branches;
  nn::Tensor l = loss();
  const uint64_t base_branches = branches.digest();
  l.backward();

  std::vector<std::vector<double>> analytic;
  int64_t total = 0;
  for (const auto& p : trainable) {
    const auto g = p.tensor.grad();
    std::vector<double> copy(p.tensor.numel(), 0.0);
    if (!g.empty()) std::copy(g.begin(), g.end(), copy.begin());
    for (double x : copy) {
      if (!std::isfinite(x)) throw NumericError("non-finite gradient for parameter " + p.name);
    }
    analytic.push_back(std::move(copy));
    total += p.tensor.numel();
  }

  std::vector<std::pair<size_t, int64_t>> coords;
  if (max_coords <= 0 || total <= max_coords) {
    for (size_t i = 0; i < trainable.size(); ++i) {
      for (int64_t k = 0; k < trainable[i].tensor.numel(); ++k) coords.emplace_back(i, k);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::set<std::pair<size_t, int64_t>> chosen;
    for (size_t i = 0; i < trainable.size() && static_cast<int64_t>(chosen.size()) < max_coords; ++i) {
      chosen.emplace(i, std::uniform_int_distribution<int64_t>(0, trainable[i].tensor.numel() - 1)(rng));
    }
    std::uniform_int_distribution<int64_t> flat(0, total - 1);
    while (static_cast<int64_t>(chosen.size()) < max_coords) {
      int64_t f = flat(rng);
      size_t i = 0;
      while (f >= trainable[i].tensor.numel()) f -= trainable[i++].tensor.numel();
      chosen.emplace(i, f);
    }
    coords.assign(chosen.begin(), chosen.end());
  }

  GradcheckResult result;
  nn::NoGradGuard no_grad;
  for (const auto& [i, k] : coords) {
    auto w = trainable[i].tensor.data();
    const double orig = w[k];
    w[k] = orig + step;
    branches.reset();
    const double plus = loss().item();
    const bool plus_kink = branches.digest() != base_branches;
    w[k] = orig - step;
    branches.reset();
    const double minus = loss().item();
    const bool kink = plus_kink || branches.digest() != base_branches;
    w[k] = orig;
    const double numeric = (plus - minus) / (2.0 * step);
    const double a = analytic[i][k];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (!std::isfinite(numeric)) {
      throw NumericError("non-finite loss while perturbing " + trainable[i].name);
    }
    ++result.coords_checked;
    if (kink) {
      ++result.kink_coords;
    } else {
      result.smooth_max_rel_error = std::max(result.smooth_max_rel_error, err);
    }
    if (err > result.max_rel_error || result.worst_index < 0) {
      result.max_rel_error = err;
      result.worst_param = trainable[i].name;
      result.worst_index = k;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace tpn::train
