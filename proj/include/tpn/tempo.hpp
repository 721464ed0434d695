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

// Visual-tempo measurements: half-maximum width of per-frame probability
// curves, per-class tempo spread, accuracy gain against that spread, and
// accuracy under re-sampled frame strides.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpn/model.hpp"
#include "tpn/trainer.hpp"
#include "tpn/videodata.hpp"

namespace tpn::tempo {

struct ProbCurve {
  std::string video_id;
  std::vector<double> values;  // per frame, in [0, 1]
};

struct TempoRecord {
  std::string video_id;
  int class_id = 0;
  double fwhm = 0.0;
};

struct ClassTempoStats {
  int class_id = 0;
  double variance = 0.0;
  int count = 0;
};

struct GainVarianceBin {
  double variance_lo = 0.0;
  double variance_hi = 0.0;
  double mean_gain = 0.0;
  int num_classes = 0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
};

// Width between the outermost half-maximum crossings, linearly
// interpolated; a side that never drops to half the peak extends to the
// curve boundary. Result lies in [0, size - 1].
double fwhm(std::span<const double> values);
inline double fwhm(const ProbCurve& curve) { return fwhm(curve.values); }

// Population variance of fwhm per class, highest variance first.
std::vector<ClassTempoStats> class_tempo_variance(std::span<const TempoRecord> records);

// Ordinary least squares y = slope * x + intercept with Pearson r
// (r = 0 when y is constant). Needs at least two distinct x values.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

enum class FitOver { kBins, kClasses };

struct GainAnalysis {
  std::vector<GainVarianceBin> bins;  // ascending, empty bins skipped
  LineFit fit;
  std::vector<std::pair<int, double>> class_gains;  // (class, tpn - base)
};

// Gain per class is tpn.per_class_top1 - base.per_class_top1; classes are
// grouped into [k * width, (k + 1) * width) variance bins. Throws
// ArgumentError when fewer than two bins (or classes) are available to fit.
GainAnalysis gain_vs_variance(std::span<const ClassTempoStats> stats,
                              const train::EvalReport& base, const train::EvalReport& tpn,
                              double bin_width, FitOver fit_over = FitOver::kBins);

// True-class softmax probability of every frame, each classified on its
// own by a model without a pyramid head.
ProbCurve frame_probabilities(Recognizer& model, const data::VideoRecord& video, int crop_size);

std::vector<TempoRecord> tempo_records(Recognizer& model, const data::Dataset& dataset,
                                       int crop_size);

struct RobustnessEntry {
  int stride = 0;
  std::optional<double> top1;
  std::string error;  // set when the stride does not fit the videos
};

// Evaluates at T frames with every stride; the window grows to T * stride
// when needed.
std::vector<RobustnessEntry> robustness_sweep(Recognizer& model, const data::Dataset& dataset,
                                              const train::InputPipeline& pipeline,
                                              std::span<const int> strides, int frames,
                                              data::CropProtocol protocol, int clips_per_video);

// max - min top1 over the successful entries.
double accuracy_spread(std::span<const RobustnessEntry> entries);

// ---- output files ----------------------------------------------------------------

void write_tempo_records(const std::filesystem::path& path, std::span<const TempoRecord> records);
void write_class_variance(const std::filesystem::path& path,
                          std::span<const ClassTempoStats> stats);
void write_gain_bins(const std::filesystem::path& path, std::span<const GainVarianceBin> bins);
void write_fit(const std::filesystem::path& path, const LineFit& fit);
void write_robustness(const std::filesystem::path& path, std::span<const RobustnessEntry> entries);

}  // namespace tpn::tempo
