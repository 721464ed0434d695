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

// Experiment configuration file (YAML). Sections: backbone, tpn (absent for
// the baseline), data, train, eval, analysis, plus a top-level out_dir.
// Every missing key takes the documented default except data.seed.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tpn/backbone.hpp"
#include "tpn/model.hpp"
#include "tpn/pyramid.hpp"
#include "tpn/tempo.hpp"
#include "tpn/trainer.hpp"
#include "tpn/videodata.hpp"

namespace tpn {

struct DataConfig {
  std::filesystem::path path = "data";
  uint64_t seed = 0;
  data::SyntheticSpec synthetic;  // training split; seed mirrors `seed`
  int val_videos_per_class = 10;
  data::SampleScheme sampling;
  bool flip = true;
};

struct EvalConfig {
  data::CropProtocol crop = data::CropProtocol::kCenter;
  int crop_size = 32;
  int clips_per_video = 1;
  int batch_size = 16;
};

struct AnalysisConfig {
  double bin_width = 10.0;
  std::vector<int> strides{2, 4, 6, 8, 10, 12, 14, 16};
  tempo::FitOver fit_over = tempo::FitOver::kBins;
};

struct ExperimentConfig {
  backbone::BackboneSpec backbone;
  std::optional<pyramid::PyramidConfig> tpn;
  DataConfig data;
  train::TrainConfig train;
  EvalConfig eval;
  AnalysisConfig analysis;
  std::filesystem::path out_dir = "runs/default";

  // Cross-section checks; throws ConfigError naming the first bad field.
  void validate() const;

  ModelSpec model_spec() const;
  train::InputPipeline pipeline() const;
  // Applies a master seed to the data and training streams.
  void set_seed(uint64_t seed);
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Fully resolved config, every default spelled out; parse_config(dump) == cfg.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace tpn
