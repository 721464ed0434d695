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

// Single-process SGD training, clip/crop evaluation and the
// finite-difference gradient checker.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpn/model.hpp"
#include "tpn/videodata.hpp"

namespace tpn::train {

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 10;
  std::vector<int> milestones;  // lr divided by 10 at each
  int batch_size = 16;
  double dropout = 0.5;
  uint64_t seed = 0;
  bool flip = true;

  void validate() const;
};

// lr * 10^-(number of milestones <= epoch); epochs count from 0.
double lr_at(const TrainConfig& cfg, int epoch);

// Classical momentum with coupled weight decay:
//   v <- momentum * v + (g + decay * w);  w <- w - lr * v
class SGD {
 public:
  SGD(nn::ParamList params, double momentum, double weight_decay);

  void step(double lr);
  void zero_grad();

  // Velocity buffers, named "<param>.momentum", for checkpointing.
  nn::ParamList state() const;
  const nn::ParamList& params() const { return params_; }

 private:
  nn::ParamList params_;  // trainable only
  std::vector<nn::Tensor> velocity_;
  double momentum_;
  double weight_decay_;
};

// Turns stored videos into model inputs for one backbone.
struct InputPipeline {
  backbone::BackboneKind kind = backbone::BackboneKind::kConv3d;
  data::SampleScheme scheme;
  int crop_size = 32;
  bool flip = true;

  // Random clip (or random segment frames), random crop and flip.
  data::Frames train_view(const data::VideoRecord& video, std::mt19937_64& rng) const;
  // Clip k of `count`, deterministic; segment schemes shift the per-span
  // pick to (k + 0.5) / count of the span.
  data::Frames eval_clip(const data::VideoRecord& video, int k, int count) const;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_top1;
};

nlohmann::json to_json(const EpochStats& stats);
void append_history(const std::filesystem::path& path, const EpochStats& stats);

struct TrainResult {
  std::vector<EpochStats> history;
  std::vector<double> step_losses;
};

struct TrainOptions {
  int start_epoch = 0;
  // Evaluated after every epoch when set.
  const data::Dataset* val = nullptr;
  data::CropProtocol val_crop = data::CropProtocol::kCenter;
  int val_clips = 1;
  std::function<void(const EpochStats&)> on_epoch;
};

TrainResult train(Recognizer& model, SGD& optimizer, const data::Dataset& dataset,
                  const TrainConfig& cfg, const InputPipeline& pipeline,
                  const TrainOptions& options = {});

struct EvalReport {
  double top1 = 0.0;
  double top5 = 0.0;
  std::map<int, double> per_class_top1;
  int num_samples = 0;
  // Clip-averaged class probabilities, one row per video.
  std::vector<std::vector<double>> probabilities;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Softmax averaged over clips x crops for every video; top-k on the average.
EvalReport evaluate(Recognizer& model, const data::Dataset& dataset, const InputPipeline& pipeline,
                    data::CropProtocol protocol, int clips_per_video, int batch_size = 16);

struct GradcheckResult {
  double max_rel_error = 0.0;
  int64_t coords_checked = 0;
  // Coordinates whose +-step stencil changed a relu sign or a max-pool
  // winner, and the worst error over the remaining ones.
  int64_t kink_coords = 0;
  double smooth_max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences of `loss` against its analytic gradient. Checks every
// trainable coordinate when there are at most `max_coords`, otherwise a
// seeded sample of `max_coords` coordinates that touches every tensor.
// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradcheckResult gradcheck(const std::function<nn::Tensor()>& loss, const nn::ParamList& params,
                          double step = 1e-3, int64_t max_coords = 0, uint64_t seed = 0);

}  // namespace tpn::train
