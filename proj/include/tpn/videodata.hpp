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

// Synthetic tempo-controlled videos, their on-disk layout, clip sampling and
// test-time crop protocols.
//
// Every synthetic video shows one bright blob that appears, travels once
// along its class trajectory at the instance's speed (pixels per frame) and
// disappears. Two classes may share a trajectory and differ only in speed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpn/backbone.hpp"
#include "tpn/tensor.hpp"

namespace tpn::data {

// uint8 pixels laid out (time, channel, height, width).
struct Frames {
  int time = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;

  size_t frame_stride() const { return static_cast<size_t>(channels) * height * width; }
  const uint8_t* frame(int t) const { return pixels.data() + t * frame_stride(); }
  uint8_t at(int t, int c, int y, int x) const {
    return pixels[((static_cast<size_t>(t) * channels + c) * height + y) * width + x];
  }
  bool operator==(const Frames&) const = default;
};

struct VideoRecord {
  std::string id;
  int class_id = 0;
  Frames frames;
  double instance_tempo = 0.0;

  bool operator==(const VideoRecord&) const = default;
};

struct Dataset {
  int num_classes = 0;
  std::vector<VideoRecord> videos;

  std::vector<int> labels() const;
};

std::vector<std::string> known_trajectories();

struct SyntheticSpec {
  int num_classes = 4;
  int videos_per_class = 50;
  int video_len = 64;
  int frame_size = 32;
  int channels = 3;
  // Per-class speed in pixels per frame and its per-instance spread.
  std::vector<double> tempo_mean;
  std::vector<double> tempo_sigma;
  // Per-class trajectory names (see known_trajectories()).
  std::vector<std::string> trajectories;
  double noise_sigma = 0.03;
  // Shutter time in frames: each frame averages the blob over the path it
  // covers during that time, so fast blobs render as dim streaks. 0 draws a
  // sharp blob.
  double exposure = 4.0;
  uint64_t seed = 0;

  // Four classes: a slow/fast pair on the same horizontal line plus a circle
  // and a zigzag.
  static SyntheticSpec default_spec(uint64_t seed);
  void validate() const;
};

// Videos for one split; ids are "<split>_c<class>_<index>" and each video is
// rendered from its own stream seeded by (seed, id).
Dataset generate_synthetic(const SyntheticSpec& spec, const std::string& split = "train",
                           int num_workers = 1);

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
};
// Arc length in pixels of a trajectory drawn on a frame_size square.
double trajectory_length(const std::string& trajectory, int frame_size);
// Point at arc length s, clamped to [0, length].
TrajectoryPoint trajectory_point(const std::string& trajectory, int frame_size, double s);

// ---- on-disk layout ----------------------------------------------------------
//
// root/dataset.json                 {num_classes, splits, ...}
// root/<split>/index.json           [{id, class_id, num_frames, tempo}, ...]
// root/<split>/<id>.bin             raw uint8 (T, C, H, W)
// root/<split>/<id>.json            {id, class_id, tempo, num_frames, channels, height, width}

void save_dataset(const std::filesystem::path& root, const std::string& split,
                  const Dataset& dataset);
void write_dataset_meta(const std::filesystem::path& root, int num_classes,
                        const std::vector<std::string>& splits);
Dataset load_dataset(const std::filesystem::path& root, const std::string& split);

// ---- sampling ----------------------------------------------------------------

enum class SampleMode { kWindowed, kSegments };

struct SampleScheme {
  SampleMode mode = SampleMode::kWindowed;
  int frames = 8;  // T
  int tau = 8;
  int window = 64;
  int num_segments = 8;

  static SampleScheme windowed(int frames, int tau, int window = 64);
  static SampleScheme segments(int n);
  // Number of frames a sampled clip holds.
  int clip_length() const { return mode == SampleMode::kWindowed ? frames : num_segments; }
  void validate() const;
};

std::string to_string(SampleMode mode);
SampleMode parse_sample_mode(const std::string& text);

// start, start + tau, ..., start + (T-1) tau.
std::vector<int> clip_indices(int video_len, const SampleScheme& scheme, int start);
// n equal spans; eval picks floor((i + 0.5) * len / n), train a uniform frame
// of each span.
std::vector<int> segment_indices(int video_len, int n, bool train, std::mt19937_64* rng);
// Clip start used at evaluation for clip `k` of `count`: windows spread
// evenly over the video, the clip centred inside its window.
int eval_clip_start(int video_len, const SampleScheme& scheme, int k, int count);

Frames select_frames(const Frames& video, const std::vector<int>& indices);
// Windowed sampling; random start (uniform window start, uniform offset
// inside the window) when `start` is empty.
Frames sample_clip(const VideoRecord& video, const SampleScheme& scheme, std::optional<int> start,
                   std::mt19937_64* rng = nullptr);
Frames sample_segments(const VideoRecord& video, int n, bool train, std::mt19937_64* rng = nullptr);

// ---- spatial transforms ----------------------------------------------------------

enum class CropProtocol { kCenter, kThreeCrop, kTenCrop };

std::string to_string(CropProtocol protocol);
CropProtocol parse_crop_protocol(const std::string& text);

Frames crop(const Frames& frames, int y0, int x0, int size);
Frames hflip(const Frames& frames);
// Bilinear resize so that the shorter side equals `side`.
Frames resize_shorter_side(const Frames& frames, int side);

// three_crop: shorter side resized to crop_size, 3 crops along the longer
// side. ten_crop: 4 corners + centre, then their horizontal flips. center:
// one centre crop.
std::vector<Frames> crop_protocol(const Frames& frames, CropProtocol protocol, int crop_size);

// Training augmentation: uniform random crop of `size` plus a fair-coin
// horizontal flip.
Frames random_crop_flip(const Frames& frames, int size, bool flip, std::mt19937_64& rng);

// Stacks clips into a model input, pixels mapped to [-1, 1]:
// conv3d -> (B, C, T, H, W); conv2d_segments -> (B, S, C, H, W).
nn::Tensor to_input(const std::vector<Frames>& clips, backbone::BackboneKind kind);

}  // namespace tpn::data
