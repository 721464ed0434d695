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

#include "tpn/tempo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tpn/error.hpp"

namespace tpn::tempo {

double fwhm(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("fwhm of an empty curve");
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("fwhm: non-finite curve value");
  }
  const double half = *std::max_element(v.begin(), v.end()) * 0.5;
  const size_t n = v.size();
  size_t first = 0;
  while (v[first] < half) ++first;
  size_t last = n - 1;
  while (v[last] < half) --last;
  // Distances from the outermost samples at or above half to the crossings.
  const double left = first == 0 ? 0.0 : (v[first] - half) / (v[first] - v[first - 1]);
  const double right = last == n - 1 ? 0.0 : (v[last] - half) / (v[last] - v[last + 1]);
  return static_cast<double>(last - first) + (left + right);
}

std::vector<ClassTempoStats> class_tempo_variance(std::span<const TempoRecord> records) {
  std::map<int, std::vector<double>> by_class;
  for (const auto& r : records) by_class[r.class_id].push_back(r.fwhm);
  std::vector<ClassTempoStats> out;
  for (auto& [cls, values] : by_class) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double x : values) sq.push_back((x - mean) * (x - mean));
    std::sort(sq.begin(), sq.end());
    out.push_back({cls, std::accumulate(sq.begin(), sq.end(), 0.0) / n,
                   static_cast<int>(values.size())});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.variance > b.variance;
  });
  return out;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("least_squares: length mismatch");
  if (x.size() < 2) throw ArgumentError("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ArgumentError("least_squares: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.pearson_r = syy == 0.0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  return fit;
}

GainAnalysis gain_vs_variance(std::span<const ClassTempoStats> stats,
                              const train::EvalReport& base, const train::EvalReport& tpn,
                              double bin_width, FitOver fit_over) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw ConfigError("analysis.bin_width", "must be positive");
  }
  GainAnalysis result;
  std::map<int64_t, std::pair<double, int>> bins;  // bin index -> (gain sum, classes)
  std::vector<double> class_var;
  std::vector<double> class_gain;
  std::vector<ClassTempoStats> ordered(stats.begin(), stats.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  for (const auto& s : ordered) {
    const auto b = base.per_class_top1.find(s.class_id);
    const auto t = tpn.per_class_top1.find(s.class_id);
    if (b == base.per_class_top1.end() || t == tpn.per_class_top1.end()) {
      throw ArgumentError("class " + std::to_string(s.class_id) +
                          " missing from an evaluation report");
    }
    const double gain = t->second - b->second;
    result.class_gains.emplace_back(s.class_id, gain);
    class_var.push_back(s.variance);
    class_gain.push_back(gain);
    auto& bin = bins[static_cast<int64_t>(std::floor(s.variance / bin_width))];
    bin.first += gain;
    bin.second += 1;
  }
  std::vector<double> centers;
  std::vector<double> means;
  for (const auto& [index, acc] : bins) {
    GainVarianceBin bin;
    bin.variance_lo = static_cast<double>(index) * bin_width;
    bin.variance_hi = bin.variance_lo + bin_width;
    bin.mean_gain = acc.first / acc.second;
    bin.num_classes = acc.second;
    result.bins.push_back(bin);
    centers.push_back(bin.variance_lo + 0.5 * bin_width);
    means.push_back(bin.mean_gain);
  }
  if (fit_over == FitOver::kBins) {
    if (result.bins.size() < 2) {
      throw ArgumentError("correlation undefined: fewer than two non-empty variance bins");
    }
    result.fit = least_squares(centers, means);
  } else {
    result.fit = least_squares(class_var, class_gain);
  }
  return result;
}

ProbCurve frame_probabilities(Recognizer& model, const data::VideoRecord& video, int crop_size) {
  if (model.has_pyramid()) {
    throw ArgumentError("frame probabilities need a model without a pyramid head");
  }
  const int classes = model.spec().num_classes;
  if (video.class_id < 0 || video.class_id >= classes) {
    throw DataError(video.id + ": label outside the model's classes");
  }
  const auto kind = model.spec().backbone.kind;
  nn::NoGradGuard no_grad;
  ProbCurve curve;
  curve.video_id = video.id;
  constexpr int kChunk = 32;
  for (int begin = 0; begin < video.frames.time; begin += kChunk) {
    const int end = std::min(video.frames.time, begin + kChunk);
    std::vector<data::Frames> singles;
    for (int t = begin; t < end; ++t) {
      singles.push_back(data::crop_protocol(data::select_frames(video.frames, {t}),
                                            data::CropProtocol::kCenter, crop_size)
                            .front());
    }
    const auto out = model.forward(data::to_input(singles, kind), /*training=*/false);
    const auto probs = nn::softmax_rows(out.logits);
    for (int r = 0; r < end - begin; ++r) {
      curve.values.push_back(probs[static_cast<size_t>(r) * classes + video.class_id]);
    }
  }
  return curve;
}

std::vector<TempoRecord> tempo_records(Recognizer& model, const data::Dataset& dataset,
                                       int crop_size) {
  std::vector<TempoRecord> out;
  out.reserve(dataset.videos.size());
  for (const auto& v : dataset.videos) {
    out.push_back({v.id, v.class_id, fwhm(frame_probabilities(model, v, crop_size))});
  }
  return out;
}

std::vector<RobustnessEntry> robustness_sweep(Recognizer& model, const data::Dataset& dataset,
                                              const train::InputPipeline& pipeline,
                                              std::span<const int> strides, int frames,
                                              data::CropProtocol protocol, int clips_per_video) {
  if (dataset.videos.empty()) throw ArgumentError("robustness sweep on an empty dataset");
  int shortest = dataset.videos.front().frames.time;
  for (const auto& v : dataset.videos) shortest = std::min(shortest, v.frames.time);
  std::vector<RobustnessEntry> out;
  for (int stride : strides) {
    RobustnessEntry entry;
    entry.stride = stride;
    const int64_t span = static_cast<int64_t>(frames - 1) * stride + 1;
    if (stride < 1 || frames < 1) {
      entry.error = "stride and frame count must be positive";
    } else if (span > shortest) {
      entry.error = "clip span " + std::to_string(span) + " exceeds the shortest video (" +
                    std::to_string(shortest) + " frames)";
    } else {
      train::InputPipeline p = pipeline;
      p.scheme = data::SampleScheme::windowed(
          frames, stride, std::max(pipeline.scheme.window, frames * stride));
      entry.top1 = train::evaluate(model, dataset, p, protocol, clips_per_video).top1;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

double accuracy_spread(std::span<const RobustnessEntry> entries) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& e : entries) {
    if (!e.top1) continue;
    lo = any ? std::min(lo, *e.top1) : *e.top1;
    hi = any ? std::max(hi, *e.top1) : *e.top1;
    any = true;
  }
  if (!any) throw ArgumentError("no successful sweep entries");
  return hi - lo;
}

// ---- output files ------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.precision(17);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace

void write_tempo_records(const std::filesystem::path& path, std::span<const TempoRecord> records) {
  auto out = open_out(path);
  out << "video_id,class_id,fwhm\n";
  for (const auto& r : records) out << r.video_id << ',' << r.class_id << ',' << r.fwhm << '\n';
  finish(out, path);
}

void write_class_variance(const std::filesystem::path& path,
                          std::span<const ClassTempoStats> stats) {
  auto out = open_out(path);
  out << "class_id,variance,count,rank\n";
  int rank = 1;
  for (const auto& s : stats) {
    out << s.class_id << ',' << s.variance << ',' << s.count << ',' << rank++ << '\n';
  }
  finish(out, path);
}

void write_gain_bins(const std::filesystem::path& path, std::span<const GainVarianceBin> bins) {
  auto out = open_out(path);
  out << "bin_lo,bin_hi,mean_gain,num_classes\n";
  for (const auto& b : bins) {
    out << b.variance_lo << ',' << b.variance_hi << ',' << b.mean_gain << ',' << b.num_classes
        << '\n';
  }
  finish(out, path);
}

void write_fit(const std::filesystem::path& path, const LineFit& fit) {
  auto out = open_out(path);
  out << nlohmann::json{{"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"pearson_r", fit.pearson_r}}
             .dump(2)
      << '\n';
  finish(out, path);
}

void write_robustness(const std::filesystem::path& path, std::span<const RobustnessEntry> entries) {
  auto out = open_out(path);
  out << "stride,top1,error\n";
  for (const auto& e : entries) {
    out << e.stride << ',';
    if (e.top1) out << *e.top1;
    out << ',' << e.error << '\n';
  }
  finish(out, path);
}

}  // namespace tpn::tempo
