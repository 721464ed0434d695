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

#include "tpn/videodata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

#include <json.hpp>

#include "tpn/error.hpp"
#include "tpn/layers.hpp"

namespace tpn::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(videos.size());
  for (const auto& v : videos) out.push_back(v.class_id);
  return out;
}

// ---- trajectories ------------------------------------------------------------

namespace {

constexpr double kBlobSigma = 1.5;
constexpr double kBackground = 0.1;
constexpr double kBlobPeak = 0.9;
constexpr int kStartJitter = 4;
constexpr int kSpatialJitter = 2;
constexpr double kTapSpacing = 0.25;

using Polyline = std::vector<TrajectoryPoint>;

Polyline polyline(const std::string& name, int frame_size) {
  const double m = std::max(3, frame_size / 8);
  const double lo = m;
  const double hi = frame_size - 1 - m;
  const double mid = (frame_size - 1) / 2.0;
  if (name == "line_h") return {{lo, mid}, {hi, mid}};
  if (name == "line_v") return {{mid, lo}, {mid, hi}};
  if (name == "diagonal") return {{lo, lo}, {hi, hi}};
  if (name == "anti_diagonal") return {{lo, hi}, {hi, lo}};
  if (name == "circle") {
    Polyline p;
    const double r = (hi - lo) / 2.0;
    constexpr int kSteps = 96;
    for (int i = 0; i <= kSteps; ++i) {
      const double a = 2.0 * std::numbers::pi * i / kSteps;
      p.push_back({mid + r * std::cos(a), mid + r * std::sin(a)});
    }
    return p;
  }
  if (name == "zigzag") {
    Polyline p;
    constexpr int kTeeth = 4;
    for (int i = 0; i <= kTeeth; ++i) {
      p.push_back({lo + (hi - lo) * i / kTeeth, i % 2 == 0 ? lo : hi});
    }
    return p;
  }
  throw ConfigError("data.synthetic.trajectories", "unknown trajectory '" + name + "'");
}

double segment_length(const TrajectoryPoint& a, const TrajectoryPoint& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

}  // namespace

std::vector<std::string> known_trajectories() {
  return {"line_h", "line_v", "diagonal", "anti_diagonal", "circle", "zigzag"};
}

double trajectory_length(const std::string& trajectory, int frame_size) {
  const auto p = polyline(trajectory, frame_size);
  double len = 0.0;
  for (size_t i = 1; i < p.size(); ++i) len += segment_length(p[i - 1], p[i]);
  return len;
}

TrajectoryPoint trajectory_point(const std::string& trajectory, int frame_size, double s) {
  const auto p = polyline(trajectory, frame_size);
  s = std::max(0.0, s);
  for (size_t i = 1; i < p.size(); ++i) {
    const double len = segment_length(p[i - 1], p[i]);
    if (s <= len) {
      const double f = len > 0.0 ? s / len : 0.0;
      return {p[i - 1].x + f * (p[i].x - p[i - 1].x), p[i - 1].y + f * (p[i].y - p[i - 1].y)};
    }
    s -= len;
  }
  return p.back();
}

// ---- generator ------------------------------------------------------------------

SyntheticSpec SyntheticSpec::default_spec(uint64_t seed) {
  SyntheticSpec s;
  s.num_classes = 4;
  s.tempo_mean = {0.5, 1.5, 1.0, 1.0};
  s.tempo_sigma = {0.05, 0.3, 0.1, 0.2};
  s.trajectories = {"line_h", "line_h", "circle", "zigzag"};
  s.seed = seed;
  return s;
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("data.synthetic.num_classes", "must be at least 2");
  if (videos_per_class < 0) throw ConfigError("data.synthetic.videos_per_class", "must be non-negative");
  if (video_len < 1) throw ConfigError("data.synthetic.video_len", "must be positive");
  if (frame_size < 8) throw ConfigError("data.synthetic.frame_size", "must be at least 8");
  if (channels < 1) throw ConfigError("data.synthetic.channels", "must be positive");
  const auto n = static_cast<size_t>(num_classes);
  if (tempo_mean.size() != n) throw ConfigError("data.synthetic.tempo_mean", "needs one entry per class");
  if (tempo_sigma.size() != n) throw ConfigError("data.synthetic.tempo_sigma", "needs one entry per class");
  if (trajectories.size() != n) throw ConfigError("data.synthetic.trajectories", "needs one entry per class");
  for (double m : tempo_mean) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("data.synthetic.tempo_mean", "must be positive");
  }
  for (double s : tempo_sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("data.synthetic.tempo_sigma", "must be >= 0");
  }
  const auto known = known_trajectories();
  for (const auto& t : trajectories) {
    if (std::find(known.begin(), known.end(), t) == known.end()) {
      throw ConfigError("data.synthetic.trajectories", "unknown trajectory '" + t + "'");
    }
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("data.synthetic.noise_sigma", "must be >= 0");
  if (!(exposure >= 0.0) || !std::isfinite(exposure)) {
    throw ConfigError("data.synthetic.exposure", "must be >= 0");
  }
}

namespace {

std::string video_id(const std::string& split, int cls, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_c%02d_%04d", split.c_str(), cls, index);
  return buf;
}

VideoRecord render_video(const SyntheticSpec& spec, const std::string& id, int cls) {
  std::mt19937_64 rng(nn::derive_seed(spec.seed, id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> start_jitter(-kStartJitter, kStartJitter);
  std::uniform_int_distribution<int> shift(-kSpatialJitter, kSpatialJitter);

  const double mean = spec.tempo_mean[cls];
  const double speed = std::max(mean + spec.tempo_sigma[cls] * normal(rng), 0.1 * mean);
  const std::string& traj = spec.trajectories[cls];
  const double length = trajectory_length(traj, spec.frame_size);
  const double duration = length / speed;
  const double t0 = (spec.video_len - duration) / 2.0 + start_jitter(rng);
  const double dx = shift(rng);
  const double dy = shift(rng);

  VideoRecord v;
  v.id = id;
  v.class_id = cls;
  v.instance_tempo = speed;
  Frames& f = v.frames;
  f.time = spec.video_len;
  f.channels = spec.channels;
  f.height = spec.frame_size;
  f.width = spec.frame_size;
  f.pixels.resize(static_cast<size_t>(f.time) * f.frame_stride());

  const int side = spec.frame_size;
  const double smear = spec.exposure * speed;
  const int taps = std::max(1, static_cast<int>(std::ceil(smear / kTapSpacing)));
  std::vector<double> plane(static_cast<size_t>(side) * side);
  std::vector<TrajectoryPoint> centers;
  for (int t = 0; t < f.time; ++t) {
    const double s = (t - t0) * speed;
    centers.clear();
    for (int k = 0; k < taps; ++k) {
      const double sk = taps == 1 ? s : s + smear * ((k + 0.5) / taps - 0.5);
      if (sk < 0.0 || sk > length) continue;
      TrajectoryPoint c = trajectory_point(traj, side, sk);
      c.x += dx;
      c.y += dy;
      centers.push_back(c);
    }
    const double weight = kBlobPeak / taps;
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        double value = kBackground;
        for (const auto& c : centers) {
          const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
          value += weight * std::exp(-r2 / (2.0 * kBlobSigma * kBlobSigma));
        }
        plane[static_cast<size_t>(y) * side + x] = value;
      }
    }
    for (int ch = 0; ch < f.channels; ++ch) {
      uint8_t* dst = f.pixels.data() + (static_cast<size_t>(t) * f.channels + ch) * side * side;
      for (size_t i = 0; i < plane.size(); ++i) {
        const double value = plane[i] + spec.noise_sigma * normal(rng);
        dst[i] = static_cast<uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
      }
    }
  }
  return v;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, const std::string& split, int num_workers) {
  spec.validate();
  Dataset ds;
  ds.num_classes = spec.num_classes;
  const int total = spec.num_classes * spec.videos_per_class;
  ds.videos.resize(total);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const int cls = i / spec.videos_per_class;
      const int idx = i % spec.videos_per_class;
      ds.videos[i] = render_video(spec, video_id(split, cls, idx), cls);
    }
  };
  const int workers = std::clamp(num_workers, 1, std::max(1, total));
  if (workers == 1) {
    work(0, total);
    return ds;
  }
  {
    std::vector<std::jthread> pool;
    const int chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(total, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return ds;
}

// ---- storage ---------------------------------------------------------------------

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

void save_dataset(const fs::path& root, const std::string& split, const Dataset& dataset) {
  const fs::path dir = root / split;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());

  json index = json::array();
  for (const auto& v : dataset.videos) {
    const Frames& f = v.frames;
    const fs::path bin = dir / (v.id + ".bin");
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw IoError(bin.string(), "cannot open for writing");
    out.write(reinterpret_cast<const char*>(f.pixels.data()),
              static_cast<std::streamsize>(f.pixels.size()));
    if (!out) throw IoError(bin.string(), "write failed");

    write_json(dir / (v.id + ".json"), {{"id", v.id},
                                        {"class_id", v.class_id},
                                        {"tempo", v.instance_tempo},
                                        {"num_frames", f.time},
                                        {"channels", f.channels},
                                        {"height", f.height},
                                        {"width", f.width}});
    index.push_back(
        {{"id", v.id}, {"class_id", v.class_id}, {"num_frames", f.time}, {"tempo", v.instance_tempo}});
  }
  write_json(dir / "index.json", index);
}

void write_dataset_meta(const fs::path& root, int num_classes,
                        const std::vector<std::string>& splits) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError(root.string(), "cannot create directory: " + ec.message());
  write_json(root / "dataset.json", {{"format", "tpn-videos"}, {"num_classes", num_classes},
                                     {"splits", splits}});
}

Dataset load_dataset(const fs::path& root, const std::string& split) {
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "no such dataset directory");
  const fs::path index_path = dir / "index.json";
  if (!fs::exists(index_path)) {
    if (fs::is_empty(dir)) throw DataError("empty dataset: " + dir.string());
    throw IoError(index_path.string(), "missing index");
  }
  const json index = read_json(index_path);
  if (!index.is_array()) throw IoError(index_path.string(), "index must be a list");
  if (index.empty()) throw DataError("empty dataset: " + dir.string());

  Dataset ds;
  int max_label = -1;
  try {
    for (const auto& entry : index) {
      VideoRecord v;
      v.id = entry.at("id").get<std::string>();
      v.class_id = entry.at("class_id").get<int>();
      v.instance_tempo = entry.at("tempo").get<double>();
      const json side = read_json(dir / (v.id + ".json"));
      Frames& f = v.frames;
      f.time = side.at("num_frames").get<int>();
      f.channels = side.at("channels").get<int>();
      f.height = side.at("height").get<int>();
      f.width = side.at("width").get<int>();
      if (f.time != entry.at("num_frames").get<int>() || side.at("class_id").get<int>() != v.class_id) {
        throw IoError((dir / (v.id + ".json")).string(), "sidecar disagrees with index");
      }
      if (f.time < 1 || f.channels < 1 || f.height < 1 || f.width < 1) {
        throw IoError((dir / (v.id + ".json")).string(), "non-positive frame dimensions");
      }
      const fs::path bin = dir / (v.id + ".bin");
      const size_t expected = static_cast<size_t>(f.time) * f.frame_stride();
      std::ifstream in(bin, std::ios::binary);
      if (!in) throw IoError(bin.string(), "cannot open");
      f.pixels.resize(expected);
      in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(expected));
      if (in.gcount() != static_cast<std::streamsize>(expected) || in.peek() != EOF) {
        throw IoError(bin.string(), "size does not match sidecar dimensions");
      }
      if (v.class_id < 0) throw DataError(v.id + ": negative class_id");
      max_label = std::max(max_label, v.class_id);
      ds.videos.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw IoError(index_path.string(), std::string("malformed entry: ") + e.what());
  }

  const fs::path meta = root / "dataset.json";
  if (fs::exists(meta)) {
    try {
      ds.num_classes = read_json(meta).at("num_classes").get<int>();
    } catch (const json::exception& e) {
      throw IoError(meta.string(), std::string("malformed metadata: ") + e.what());
    }
    if (max_label >= ds.num_classes) {
      throw DataError(meta.string() + ": num_classes " + std::to_string(ds.num_classes) +
                      " but label " + std::to_string(max_label) + " present");
    }
  } else {
    ds.num_classes = max_label + 1;
  }
  return ds;
}

// ---- sampling --------------------------------------------------------------------

SampleScheme SampleScheme::windowed(int frames, int tau, int window) {
  SampleScheme s;
  s.mode = SampleMode::kWindowed;
  s.frames = frames;
  s.tau = tau;
  s.window = window;
  return s;
}

SampleScheme SampleScheme::segments(int n) {
  SampleScheme s;
  s.mode = SampleMode::kSegments;
  s.num_segments = n;
  return s;
}

void SampleScheme::validate() const {
  if (mode == SampleMode::kSegments) {
    if (num_segments < 1) throw ConfigError("data.sampling.num_segments", "must be at least 1");
    return;
  }
  if (frames < 1) throw ConfigError("data.sampling.frames", "must be at least 1");
  if (tau < 1) throw ConfigError("data.sampling.tau", "must be at least 1");
  if (window < 1) throw ConfigError("data.sampling.window", "must be at least 1");
  if (static_cast<int64_t>(frames) * tau > window) {
    throw ConfigError("data.sampling", "T*tau = " + std::to_string(frames * tau) +
                                           " exceeds the window of " + std::to_string(window));
  }
}

std::string to_string(SampleMode mode) {
  return mode == SampleMode::kWindowed ? "windowed" : "segments";
}

SampleMode parse_sample_mode(const std::string& text) {
  if (text == "windowed") return SampleMode::kWindowed;
  if (text == "segments") return SampleMode::kSegments;
  throw ConfigError("data.sampling.mode", "unknown mode '" + text + "'");
}

std::vector<int> clip_indices(int video_len, const SampleScheme& scheme, int start) {
  if (scheme.mode != SampleMode::kWindowed) {
    throw ArgumentError("clip_indices needs a windowed scheme");
  }
  scheme.validate();
  const int64_t last = start + static_cast<int64_t>(scheme.frames - 1) * scheme.tau;
  if (start < 0 || last >= video_len) {
    throw DataError("clip [" + std::to_string(start) + ", " + std::to_string(last) +
                    "] does not fit a video of " + std::to_string(video_len) + " frames");
  }
  std::vector<int> idx(scheme.frames);
  for (int k = 0; k < scheme.frames; ++k) idx[k] = start + k * scheme.tau;
  return idx;
}

std::vector<int> segment_indices(int video_len, int n, bool train, std::mt19937_64* rng) {
  if (n < 1) throw ConfigError("data.sampling.num_segments", "must be at least 1");
  if (video_len < n) {
    throw DataError("video of " + std::to_string(video_len) + " frames is shorter than " +
                    std::to_string(n) + " segments");
  }
  if (train && rng == nullptr) throw ArgumentError("training segment sampling needs an rng");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    if (train) {
      const int lo = static_cast<int>(static_cast<int64_t>(i) * video_len / n);
      const int hi = static_cast<int>(static_cast<int64_t>(i + 1) * video_len / n) - 1;
      idx[i] = std::uniform_int_distribution<int>(lo, hi)(*rng);
    } else {
      idx[i] = static_cast<int>(std::floor((i + 0.5) * video_len / n));
    }
  }
  return idx;
}

namespace {

int clip_span(const SampleScheme& scheme) { return (scheme.frames - 1) * scheme.tau + 1; }

int effective_window(int video_len, const SampleScheme& scheme) {
  return std::min(video_len, scheme.window);
}

}  // namespace

int eval_clip_start(int video_len, const SampleScheme& scheme, int k, int count) {
  if (count < 1 || k < 0 || k >= count) throw ArgumentError("clip index out of range");
  const int window = effective_window(video_len, scheme);
  const int span = clip_span(scheme);
  if (span > video_len) {
    throw DataError("clip span " + std::to_string(span) + " exceeds video length " +
                    std::to_string(video_len));
  }
  const int free = video_len - window;
  const int window_start =
      count == 1 ? free / 2 : static_cast<int>(std::lround(static_cast<double>(k) * free / (count - 1)));
  return window_start + std::max(0, window - span) / 2;
}

Frames select_frames(const Frames& video, const std::vector<int>& indices) {
  Frames out;
  out.time = static_cast<int>(indices.size());
  out.channels = video.channels;
  out.height = video.height;
  out.width = video.width;
  out.pixels.resize(indices.size() * video.frame_stride());
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= video.time) throw DataError("frame index out of range");
    std::copy_n(video.frame(indices[i]), video.frame_stride(),
                out.pixels.data() + i * video.frame_stride());
  }
  return out;
}

Frames sample_clip(const VideoRecord& video, const SampleScheme& scheme, std::optional<int> start,
                   std::mt19937_64* rng) {
  scheme.validate();
  const int len = video.frames.time;
  int s = 0;
  if (start) {
    s = *start;
  } else {
    if (rng == nullptr) throw ArgumentError("random clip start needs an rng");
    const int window = effective_window(len, scheme);
    const int span = clip_span(scheme);
    if (span > len) throw DataError(video.id + ": too short for the clip span");
    const int window_start = std::uniform_int_distribution<int>(0, len - window)(*rng);
    const int offset = std::uniform_int_distribution<int>(0, std::max(0, window - span))(*rng);
    s = window_start + offset;
  }
  return select_frames(video.frames, clip_indices(len, scheme, s));
}

Frames sample_segments(const VideoRecord& video, int n, bool train, std::mt19937_64* rng) {
  return select_frames(video.frames, segment_indices(video.frames.time, n, train, rng));
}

// ---- spatial transforms -----------------------------------------------------------

std::string to_string(CropProtocol protocol) {
  switch (protocol) {
    case CropProtocol::kCenter:
      return "center";
    case CropProtocol::kThreeCrop:
      return "three_crop";
    case CropProtocol::kTenCrop:
      return "ten_crop";
  }
  return "?";
}

CropProtocol parse_crop_protocol(const std::string& text) {
  if (text == "center") return CropProtocol::kCenter;
  if (text == "three_crop") return CropProtocol::kThreeCrop;
  if (text == "ten_crop") return CropProtocol::kTenCrop;
  throw ConfigError("eval.crop", "unknown crop protocol '" + text + "'");
}

Frames crop(const Frames& frames, int y0, int x0, int size) {
  if (size < 1 || y0 < 0 || x0 < 0 || y0 + size > frames.height || x0 + size > frames.width) {
    throw DataError("crop " + std::to_string(size) + " at (" + std::to_string(y0) + ", " +
                    std::to_string(x0) + ") outside a " + std::to_string(frames.height) + "x" +
                    std::to_string(frames.width) + " frame");
  }
  Frames out{frames.time, frames.channels, size, size, {}};
  out.pixels.resize(static_cast<size_t>(out.time) * out.frame_stride());
  uint8_t* dst = out.pixels.data();
  for (int t = 0; t < frames.time; ++t) {
    for (int c = 0; c < frames.channels; ++c) {
      for (int y = 0; y < size; ++y) {
        const uint8_t* src =
            frames.pixels.data() +
            ((static_cast<size_t>(t) * frames.channels + c) * frames.height + y0 + y) * frames.width + x0;
        dst = std::copy_n(src, size, dst);
      }
    }
  }
  return out;
}

Frames hflip(const Frames& frames) {
  Frames out = frames;
  const size_t rows = static_cast<size_t>(frames.time) * frames.channels * frames.height;
  for (size_t r = 0; r < rows; ++r) {
    auto* row = out.pixels.data() + r * frames.width;
    std::reverse(row, row + frames.width);
  }
  return out;
}

Frames resize_shorter_side(const Frames& frames, int side) {
  if (side < 1) throw ArgumentError("resize target must be positive");
  const int shorter = std::min(frames.height, frames.width);
  if (shorter == side) return frames;
  const double scale = static_cast<double>(side) / shorter;
  const int h = frames.height == shorter ? side : static_cast<int>(std::lround(frames.height * scale));
  const int w = frames.width == shorter ? side : static_cast<int>(std::lround(frames.width * scale));
  Frames out{frames.time, frames.channels, h, w, {}};
  out.pixels.resize(static_cast<size_t>(out.time) * out.frame_stride());
  const double sy = static_cast<double>(frames.height) / h;
  const double sx = static_cast<double>(frames.width) / w;
  for (int t = 0; t < frames.time; ++t) {
    for (int c = 0; c < frames.channels; ++c) {
      for (int y = 0; y < h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, frames.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, frames.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < w; ++x) {
          const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, frames.width - 1.0);
          const int x0 = static_cast<int>(fx);
          const int x1 = std::min(x0 + 1, frames.width - 1);
          const double wx = fx - x0;
          const double v = (1 - wy) * ((1 - wx) * frames.at(t, c, y0, x0) + wx * frames.at(t, c, y0, x1)) +
                           wy * ((1 - wx) * frames.at(t, c, y1, x0) + wx * frames.at(t, c, y1, x1));
          out.pixels[((static_cast<size_t>(t) * out.channels + c) * h + y) * w + x] =
              static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
        }
      }
    }
  }
  return out;
}

std::vector<Frames> crop_protocol(const Frames& frames, CropProtocol protocol, int crop_size) {
  if (crop_size < 1) throw ConfigError("eval.crop_size", "must be positive");
  if (protocol == CropProtocol::kThreeCrop) {
    const Frames r = resize_shorter_side(frames, crop_size);
    std::vector<Frames> out;
    const bool wide = r.width >= r.height;
    const int free = (wide ? r.width : r.height) - crop_size;
    for (int k = 0; k < 3; ++k) {
      const int off = free * k / 2;
      out.push_back(wide ? crop(r, 0, off, crop_size) : crop(r, off, 0, crop_size));
    }
    return out;
  }
  if (frames.height < crop_size || frames.width < crop_size) {
    throw DataError("frame " + std::to_string(frames.height) + "x" + std::to_string(frames.width) +
                    " smaller than crop " + std::to_string(crop_size));
  }
  const int cy = (frames.height - crop_size) / 2;
  const int cx = (frames.width - crop_size) / 2;
  if (protocol == CropProtocol::kCenter) return {crop(frames, cy, cx, crop_size)};

  const int by = frames.height - crop_size;
  const int bx = frames.width - crop_size;
  std::vector<Frames> out = {crop(frames, 0, 0, crop_size), crop(frames, 0, bx, crop_size),
                             crop(frames, by, 0, crop_size), crop(frames, by, bx, crop_size),
                             crop(frames, cy, cx, crop_size)};
  for (int k = 0; k < 5; ++k) out.push_back(hflip(out[k]));
  return out;
}

Frames random_crop_flip(const Frames& frames, int size, bool flip, std::mt19937_64& rng) {
  const int y0 = std::uniform_int_distribution<int>(0, frames.height - size)(rng);
  const int x0 = std::uniform_int_distribution<int>(0, frames.width - size)(rng);
  Frames out = (size == frames.height && size == frames.width) ? frames : crop(frames, y0, x0, size);
  if (flip && std::bernoulli_distribution(0.5)(rng)) out = hflip(out);
  return out;
}

nn::Tensor to_input(const std::vector<Frames>& clips, backbone::BackboneKind kind) {
  if (clips.empty()) throw ArgumentError("to_input needs at least one clip");
  const Frames& first = clips.front();
  const int64_t b = static_cast<int64_t>(clips.size());
  const int64_t t = first.time, c = first.channels, h = first.height, w = first.width;
  const bool segments = kind == backbone::BackboneKind::kConv2dSegments;
  nn::Shape shape = segments ? nn::Shape{b, t, c, h, w} : nn::Shape{b, c, t, h, w};
  std::vector<double> values(static_cast<size_t>(b * t * c * h * w));
  const int64_t plane = h * w;
  for (int64_t n = 0; n < b; ++n) {
    const Frames& f = clips[n];
    if (f.time != t || f.channels != c || f.height != h || f.width != w) {
      throw ShapeError("clips in a batch must share one shape");
    }
    for (int64_t ti = 0; ti < t; ++ti) {
      for (int64_t ci = 0; ci < c; ++ci) {
        const uint8_t* src = f.pixels.data() + (ti * c + ci) * plane;
        const int64_t base = segments ? ((n * t + ti) * c + ci) * plane : ((n * c + ci) * t + ti) * plane;
        for (int64_t i = 0; i < plane; ++i) values[base + i] = (src[i] - 127.5) / 127.5;
      }
    }
  }
  return nn::Tensor(std::move(shape), std::move(values));
}

}  // namespace tpn::data
