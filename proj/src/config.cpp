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

#include "tpn/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tpn/error.hpp"

namespace tpn {

namespace {

void check_keys(const YAML::Node& node, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError(section, "must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError(section.empty() ? key : section + "." + key, "unknown key");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& section, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(section + "." + key, "has the wrong type");
  }
}

std::string read_string(const YAML::Node& node, const char* key, const std::string& section,
                        const std::string& fallback) {
  std::string s = fallback;
  read(node, key, section, s);
  return s;
}

backbone::BackboneSpec parse_backbone(const YAML::Node& n) {
  const std::string s = "backbone";
  check_keys(n, s,
             {"kind", "depth_blocks", "base_channels", "temporal_kernels", "input_frames",
              "input_size", "in_channels"});
  backbone::BackboneSpec b;
  if (!n) return b;
  b.kind = backbone::parse_backbone_kind(read_string(n, "kind", s, backbone::to_string(b.kind)));
  if (b.kind == backbone::BackboneKind::kConv2dSegments) b = backbone::BackboneSpec::toy_2d();
  read(n, "depth_blocks", s, b.depth_blocks);
  read(n, "base_channels", s, b.base_channels);
  read(n, "temporal_kernels", s, b.temporal_kernels);
  read(n, "input_frames", s, b.input_frames);
  read(n, "input_size", s, b.input_size);
  read(n, "in_channels", s, b.in_channels);
  return b;
}

pyramid::PyramidConfig parse_tpn(const YAML::Node& n) {
  const std::string s = "tpn";
  check_keys(n, s,
             {"source_mode", "stages", "rates", "alphas", "flow", "mod_channels", "lambdas",
              "dropout", "aux_heads", "spatial_convs", "temporal_modulation"});
  pyramid::PyramidConfig p;
  p.source_mode =
      pyramid::parse_source_mode(read_string(n, "source_mode", s, to_string(p.source_mode)));
  read(n, "stages", s, p.stages);
  read(n, "rates", s, p.rates);
  read(n, "alphas", s, p.alphas);
  p.flow = pyramid::parse_flow(read_string(n, "flow", s, to_string(p.flow)));
  read(n, "mod_channels", s, p.mod_channels);
  if (n["lambdas"]) {
    read(n, "lambdas", s, p.lambdas);
  } else {
    p.lambdas.assign(std::max(0, p.levels() - 1), 0.5);
  }
  read(n, "dropout", s, p.dropout);
  read(n, "aux_heads", s, p.aux_heads);
  read(n, "spatial_convs", s, p.spatial_convs);
  read(n, "temporal_modulation", s, p.temporal_modulation);
  return p;
}

DataConfig parse_data(const YAML::Node& n) {
  const std::string s = "data";
  check_keys(n, s, {"path", "seed", "synthetic", "val_videos_per_class", "sampling", "flip"});
  if (!n || !n["seed"]) throw ConfigError("data.seed", "is required");
  DataConfig d;
  std::string path = d.path.string();
  read(n, "path", s, path);
  d.path = path;
  read(n, "seed", s, d.seed);
  read(n, "val_videos_per_class", s, d.val_videos_per_class);
  read(n, "flip", s, d.flip);

  d.synthetic = data::SyntheticSpec::default_spec(d.seed);
  const YAML::Node syn = n["synthetic"];
  const std::string ss = "data.synthetic";
  check_keys(syn, ss,
             {"num_classes", "videos_per_class", "video_len", "frame_size", "channels",
              "tempo_mean", "tempo_sigma", "trajectories", "noise_sigma",
              "exposure"});
  if (syn) {
    read(syn, "num_classes", ss, d.synthetic.num_classes);
    read(syn, "videos_per_class", ss, d.synthetic.videos_per_class);
    read(syn, "video_len", ss, d.synthetic.video_len);
    read(syn, "frame_size", ss, d.synthetic.frame_size);
    read(syn, "channels", ss, d.synthetic.channels);
    read(syn, "tempo_mean", ss, d.synthetic.tempo_mean);
    read(syn, "tempo_sigma", ss, d.synthetic.tempo_sigma);
    read(syn, "trajectories", ss, d.synthetic.trajectories);
    read(syn, "noise_sigma", ss, d.synthetic.noise_sigma);
    read(syn, "exposure", ss, d.synthetic.exposure);
  }

  const YAML::Node sam = n["sampling"];
  const std::string sp = "data.sampling";
  check_keys(sam, sp, {"mode", "frames", "tau", "window", "num_segments"});
  if (sam) {
    d.sampling.mode = data::parse_sample_mode(read_string(sam, "mode", sp, "windowed"));
    read(sam, "frames", sp, d.sampling.frames);
    read(sam, "tau", sp, d.sampling.tau);
    read(sam, "window", sp, d.sampling.window);
    read(sam, "num_segments", sp, d.sampling.num_segments);
  }
  return d;
}

train::TrainConfig parse_train(const YAML::Node& n, uint64_t data_seed) {
  const std::string s = "train";
  check_keys(n, s,
             {"lr", "momentum", "weight_decay", "epochs", "milestones", "batch_size", "dropout",
              "seed"});
  train::TrainConfig t;
  t.seed = data_seed;
  if (!n) return t;
  read(n, "lr", s, t.lr);
  read(n, "momentum", s, t.momentum);
  read(n, "weight_decay", s, t.weight_decay);
  read(n, "epochs", s, t.epochs);
  read(n, "milestones", s, t.milestones);
  read(n, "batch_size", s, t.batch_size);
  read(n, "dropout", s, t.dropout);
  read(n, "seed", s, t.seed);
  return t;
}

EvalConfig parse_eval(const YAML::Node& n, int default_crop) {
  const std::string s = "eval";
  check_keys(n, s, {"crop", "crop_size", "clips_per_video", "batch_size"});
  EvalConfig e;
  e.crop_size = default_crop;
  if (!n) return e;
  e.crop = data::parse_crop_protocol(read_string(n, "crop", s, "center"));
  read(n, "crop_size", s, e.crop_size);
  read(n, "clips_per_video", s, e.clips_per_video);
  read(n, "batch_size", s, e.batch_size);
  return e;
}

AnalysisConfig parse_analysis(const YAML::Node& n) {
  const std::string s = "analysis";
  check_keys(n, s, {"bin_width", "strides", "fit_over"});
  AnalysisConfig a;
  if (!n) return a;
  read(n, "bin_width", s, a.bin_width);
  read(n, "strides", s, a.strides);
  const std::string fit = read_string(n, "fit_over", s, "bins");
  if (fit == "bins") {
    a.fit_over = tempo::FitOver::kBins;
  } else if (fit == "classes") {
    a.fit_over = tempo::FitOver::kClasses;
  } else {
    throw ConfigError("analysis.fit_over", "must be 'bins' or 'classes'");
  }
  return a;
}

}  // namespace

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("malformed YAML: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("config", "empty document");
  check_keys(root, "", {"backbone", "tpn", "data", "train", "eval", "analysis", "out_dir"});
  ExperimentConfig cfg;
  cfg.backbone = parse_backbone(root["backbone"]);
  if (root["tpn"] && !root["tpn"].IsNull()) cfg.tpn = parse_tpn(root["tpn"]);
  cfg.data = parse_data(root["data"]);
  cfg.train = parse_train(root["train"], cfg.data.seed);
  cfg.eval = parse_eval(root["eval"], cfg.backbone.input_size);
  cfg.analysis = parse_analysis(root["analysis"]);
  std::string out = cfg.out_dir.string();
  read(root, "out_dir", "config", out);
  cfg.out_dir = out;
  if (!root["data"]["sampling"]) {
    cfg.data.sampling = cfg.backbone.kind == backbone::BackboneKind::kConv3d
                            ? data::SampleScheme::windowed(cfg.backbone.input_frames, 8)
                            : data::SampleScheme::segments(cfg.backbone.input_frames);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::set_seed(uint64_t seed) {
  data.seed = seed;
  data.synthetic.seed = seed;
  train.seed = seed;
}

void ExperimentConfig::validate() const {
  backbone.validate();
  data.synthetic.validate();
  data.sampling.validate();
  train.validate();
  const auto& bb = backbone;
  if (bb.kind == backbone::BackboneKind::kConv3d) {
    if (data.sampling.mode != data::SampleMode::kWindowed) {
      throw ConfigError("data.sampling.mode", "conv3d backbones take windowed clips");
    }
    if (data.sampling.frames != bb.input_frames) {
      throw ConfigError("data.sampling.frames", "must equal backbone.input_frames");
    }
    if (data.synthetic.video_len < data.sampling.window) {
      throw ConfigError("data.synthetic.video_len", "shorter than the sampling window");
    }
  } else {
    if (data.sampling.mode != data::SampleMode::kSegments) {
      throw ConfigError("data.sampling.mode", "segment backbones take segment sampling");
    }
    if (data.sampling.num_segments != bb.input_frames) {
      throw ConfigError("data.sampling.num_segments", "must equal backbone.input_frames");
    }
    if (data.synthetic.video_len < data.sampling.num_segments) {
      throw ConfigError("data.synthetic.video_len", "shorter than the segment count");
    }
  }
  if (data.synthetic.frame_size < bb.input_size) {
    throw ConfigError("data.synthetic.frame_size", "smaller than backbone.input_size");
  }
  if (data.synthetic.channels != bb.in_channels) {
    throw ConfigError("data.synthetic.channels", "must equal backbone.in_channels");
  }
  if (data.val_videos_per_class < 0) {
    throw ConfigError("data.val_videos_per_class", "must be non-negative");
  }
  if (tpn) {
    tpn->validate();
    tpn->validate_against(bb, bb.input_frames);
  }
  if (eval.crop_size != bb.input_size) {
    throw ConfigError("eval.crop_size", "must equal backbone.input_size");
  }
  if (eval.clips_per_video < 1) throw ConfigError("eval.clips_per_video", "must be at least 1");
  if (eval.batch_size < 1) throw ConfigError("eval.batch_size", "must be at least 1");
  if (!(analysis.bin_width > 0.0)) throw ConfigError("analysis.bin_width", "must be positive");
  for (int s : analysis.strides) {
    if (s < 1) throw ConfigError("analysis.strides", "must be positive");
  }
}

ModelSpec ExperimentConfig::model_spec() const {
  ModelSpec m;
  m.backbone = backbone;
  m.tpn = tpn;
  m.num_classes = data.synthetic.num_classes;
  m.dropout = train.dropout;
  m.seed = train.seed;
  return m;
}

train::InputPipeline ExperimentConfig::pipeline() const {
  train::InputPipeline p;
  p.kind = backbone.kind;
  p.scheme = data.sampling;
  p.crop_size = backbone.input_size;
  p.flip = data.flip;
  return p;
}

std::string dump_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "out_dir" << YAML::Value << cfg.out_dir.string();

  const auto& b = cfg.backbone;
  e << YAML::Key << "backbone" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << backbone::to_string(b.kind);
  e << YAML::Key << "depth_blocks" << YAML::Value << YAML::Flow << b.depth_blocks;
  e << YAML::Key << "base_channels" << YAML::Value << b.base_channels;
  e << YAML::Key << "temporal_kernels" << YAML::Value << YAML::Flow << b.temporal_kernels;
  e << YAML::Key << "input_frames" << YAML::Value << b.input_frames;
  e << YAML::Key << "input_size" << YAML::Value << b.input_size;
  e << YAML::Key << "in_channels" << YAML::Value << b.in_channels;
  e << YAML::EndMap;

  if (cfg.tpn) {
    const auto& p = *cfg.tpn;
    e << YAML::Key << "tpn" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "source_mode" << YAML::Value << to_string(p.source_mode);
    e << YAML::Key << "stages" << YAML::Value << YAML::Flow << p.stages;
    e << YAML::Key << "rates" << YAML::Value << YAML::Flow << p.rates;
    e << YAML::Key << "alphas" << YAML::Value << YAML::Flow << p.alphas;
    e << YAML::Key << "flow" << YAML::Value << to_string(p.flow);
    e << YAML::Key << "mod_channels" << YAML::Value << p.mod_channels;
    e << YAML::Key << "lambdas" << YAML::Value << YAML::Flow << p.lambdas;
    e << YAML::Key << "dropout" << YAML::Value << p.dropout;
    e << YAML::Key << "aux_heads" << YAML::Value << p.aux_heads;
    e << YAML::Key << "spatial_convs" << YAML::Value << p.spatial_convs;
    e << YAML::Key << "temporal_modulation" << YAML::Value << p.temporal_modulation;
    e << YAML::EndMap;
  }

  const auto& d = cfg.data;
  e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "path" << YAML::Value << d.path.string();
  e << YAML::Key << "seed" << YAML::Value << d.seed;
  e << YAML::Key << "val_videos_per_class" << YAML::Value << d.val_videos_per_class;
  e << YAML::Key << "flip" << YAML::Value << d.flip;
  const auto& s = d.synthetic;
  e << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "num_classes" << YAML::Value << s.num_classes;
  e << YAML::Key << "videos_per_class" << YAML::Value << s.videos_per_class;
  e << YAML::Key << "video_len" << YAML::Value << s.video_len;
  e << YAML::Key << "frame_size" << YAML::Value << s.frame_size;
  e << YAML::Key << "channels" << YAML::Value << s.channels;
  e << YAML::Key << "tempo_mean" << YAML::Value << YAML::Flow << s.tempo_mean;
  e << YAML::Key << "tempo_sigma" << YAML::Value << YAML::Flow << s.tempo_sigma;
  e << YAML::Key << "trajectories" << YAML::Value << YAML::Flow << s.trajectories;
  e << YAML::Key << "noise_sigma" << YAML::Value << s.noise_sigma;
  e << YAML::Key << "exposure" << YAML::Value << s.exposure;
  e << YAML::EndMap;
  e << YAML::Key << "sampling" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << data::to_string(d.sampling.mode);
  e << YAML::Key << "frames" << YAML::Value << d.sampling.frames;
  e << YAML::Key << "tau" << YAML::Value << d.sampling.tau;
  e << YAML::Key << "window" << YAML::Value << d.sampling.window;
  e << YAML::Key << "num_segments" << YAML::Value << d.sampling.num_segments;
  e << YAML::EndMap;
  e << YAML::EndMap;

  const auto& t = cfg.train;
  e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "lr" << YAML::Value << t.lr;
  e << YAML::Key << "momentum" << YAML::Value << t.momentum;
  e << YAML::Key << "weight_decay" << YAML::Value << t.weight_decay;
  e << YAML::Key << "epochs" << YAML::Value << t.epochs;
  e << YAML::Key << "milestones" << YAML::Value << YAML::Flow << t.milestones;
  e << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  e << YAML::Key << "dropout" << YAML::Value << t.dropout;
  e << YAML::Key << "seed" << YAML::Value << t.seed;
  e << YAML::EndMap;

  e << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "crop" << YAML::Value << data::to_string(cfg.eval.crop);
  e << YAML::Key << "crop_size" << YAML::Value << cfg.eval.crop_size;
  e << YAML::Key << "clips_per_video" << YAML::Value << cfg.eval.clips_per_video;
  e << YAML::Key << "batch_size" << YAML::Value << cfg.eval.batch_size;
  e << YAML::EndMap;

  e << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "bin_width" << YAML::Value << cfg.analysis.bin_width;
  e << YAML::Key << "strides" << YAML::Value << YAML::Flow << cfg.analysis.strides;
  e << YAML::Key << "fit_over" << YAML::Value
    << (cfg.analysis.fit_over == tempo::FitOver::kBins ? "bins" : "classes");
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace tpn
