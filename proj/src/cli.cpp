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

#include "tpn/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tpn/checkpoint.hpp"
#include "tpn/config.hpp"
#include "tpn/error.hpp"
#include "tpn/tempo.hpp"

namespace tpn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Refusing to touch existing outputs; reported like a validation error.
class Refusal : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "master seed for data and training");
  cmd->add_flag("--force", c.force, "overwrite existing outputs");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

bool non_empty_dir(const fs::path& dir) { return fs::is_directory(dir) && !fs::is_empty(dir); }

void write_lock(const fs::path& dir, const ExperimentConfig& cfg) {
  make_dir(dir);
  write_text(dir / "config.lock", dump_config(cfg));
}

int num_workers() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("TPN_NUM_WORKERS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw ConfigError("TPN_NUM_WORKERS", "must be a positive integer");
    }
    n = std::min<long>(n, cap);
  }
  return n;
}

nn::ParamList with_optimizer(const Recognizer& model, const train::SGD& sgd) {
  auto params = model.parameters();
  auto state = sgd.state();
  params.insert(params.end(), state.begin(), state.end());
  return params;
}

// ---- gen-data ------------------------------------------------------------------------

int cmd_gen_data(const Common& c, std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path root = c.out.empty() ? cfg.data.path : fs::path(c.out);
  if (non_empty_dir(root) && !c.force) {
    throw Refusal(root.string() + " is not empty; pass --force to overwrite");
  }
  cfg.data.path = root;
  const int workers = num_workers();
  if (fs::exists(root)) fs::remove_all(root);

  data::SyntheticSpec spec = cfg.data.synthetic;
  const auto train_set = data::generate_synthetic(spec, "train", workers);
  spec.videos_per_class = cfg.data.val_videos_per_class;
  const auto val_set = data::generate_synthetic(spec, "val", workers);

  std::vector<std::string> splits{"train"};
  data::save_dataset(root, "train", train_set);
  if (!val_set.videos.empty()) {
    data::save_dataset(root, "val", val_set);
    splits.push_back("val");
  }
  data::write_dataset_meta(root, spec.num_classes, splits);
  write_lock(root, cfg);
  out << "wrote " << train_set.videos.size() << " train / " << val_set.videos.size()
      << " val videos to " << root.string() << '\n';
  return kOk;
}

// ---- train ------------------------------------------------------------------------------

data::Dataset load_split(const ExperimentConfig& cfg, const std::string& split) {
  auto ds = data::load_dataset(cfg.data.path, split);
  if (ds.num_classes != cfg.data.synthetic.num_classes) {
    throw ConfigError("data.synthetic.num_classes",
                      "config says " + std::to_string(cfg.data.synthetic.num_classes) +
                          " classes, dataset has " + std::to_string(ds.num_classes));
  }
  return ds;
}

std::optional<data::Dataset> load_optional_split(const ExperimentConfig& cfg,
                                                 const std::string& split) {
  if (!fs::exists(cfg.data.path / split / "index.json")) return std::nullopt;
  return load_split(cfg, split);
}

struct TrainOutcome {
  train::EvalReport report;
  std::vector<train::EpochStats> history;
};

// Trains one configuration into `dir` (checkpoint/, history.jsonl) and
// evaluates it on `val` when given.
TrainOutcome train_into(const ExperimentConfig& cfg, const fs::path& dir,
                        const data::Dataset& train_set, const data::Dataset* val,
                        const std::optional<fs::path>& resume, std::ostream& out) {
  Recognizer model(cfg.model_spec());
  train::SGD sgd(model.parameters(), cfg.train.momentum, cfg.train.weight_decay);
  train::TrainOptions options;
  const fs::path history = dir / "history.jsonl";
  const fs::path ckpt = dir / "checkpoint";
  if (resume) {
    auto params = with_optimizer(model, sgd);
    const json meta = load_checkpoint(*resume, params);
    options.start_epoch = meta.value("epochs_completed", 0);
  } else {
    write_text(history, "");
  }
  const std::string lock = dump_config(cfg);
  auto save = [&](int completed) {
    save_checkpoint(ckpt, with_optimizer(model, sgd),
                    {{"epochs_completed", completed}, {"config", lock}});
  };
  options.val = val;
  options.val_crop = cfg.eval.crop;
  options.val_clips = cfg.eval.clips_per_video;
  options.on_epoch = [&](const train::EpochStats& s) {
    append_history(history, s);
    save(s.epoch + 1);
    out << "epoch " << s.epoch << " lr " << s.lr << " loss " << s.train_loss;
    if (s.val_top1) out << " val_top1 " << *s.val_top1;
    out << '\n';
  };
  if (options.start_epoch >= cfg.train.epochs) save(options.start_epoch);
  TrainOutcome outcome;
  outcome.history =
      train::train(model, sgd, train_set, cfg.train, cfg.pipeline(), options).history;
  if (val != nullptr) {
    outcome.report = train::evaluate(model, *val, cfg.pipeline(), cfg.eval.crop,
                                     cfg.eval.clips_per_video, cfg.eval.batch_size);
  }
  return outcome;
}

int cmd_train(const Common& c, const std::string& resume, std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path dir = c.out.empty() ? cfg.out_dir : fs::path(c.out);
  cfg.out_dir = dir;
  if (fs::exists(dir / "checkpoint") && !c.force && resume.empty()) {
    throw Refusal((dir / "checkpoint").string() + " exists; pass --force or --resume");
  }
  std::optional<fs::path> resume_dir;
  if (!resume.empty()) {
    resume_dir = resume;
    if (!fs::exists(*resume_dir / kManifestFile)) {
      throw IoError((*resume_dir / kManifestFile).string(), "checkpoint not found");
    }
  }
  const auto train_set = load_split(cfg, "train");
  const auto val = load_optional_split(cfg, "val");
  write_lock(dir, cfg);
  const auto outcome = train_into(cfg, dir, train_set, val ? &*val : nullptr, resume_dir, out);
  if (val) {
    write_json(dir / "eval.json", train::to_json(outcome.report));
    out << "val top1 " << outcome.report.top1 << " top5 " << outcome.report.top5 << '\n';
  }
  return kOk;
}

// ---- eval -----------------------------------------------------------------------------------

int cmd_eval(const Common& c, const std::string& checkpoint, std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path dir = c.out.empty() ? cfg.out_dir : fs::path(c.out);
  const fs::path ckpt = checkpoint.empty() ? dir / "checkpoint" : fs::path(checkpoint);
  const auto val = load_split(cfg, "val");
  Recognizer model(cfg.model_spec());
  auto params = model.parameters();
  load_checkpoint(ckpt, params);
  write_lock(dir, cfg);
  const auto report = train::evaluate(model, val, cfg.pipeline(), cfg.eval.crop,
                                      cfg.eval.clips_per_video, cfg.eval.batch_size);
  write_json(dir / "eval.json", train::to_json(report));
  out << "top1 " << report.top1 << " top5 " << report.top5 << " (" << report.num_samples
      << " videos)\n";
  return kOk;
}

// ---- ablate ---------------------------------------------------------------------------------

struct AblationRow {
  std::string label;
  ExperimentConfig cfg;
};

pyramid::PyramidConfig reference_tpn(const ExperimentConfig& cfg) {
  return cfg.tpn ? *cfg.tpn : pyramid::PyramidConfig{};
}

void set_levels(pyramid::PyramidConfig& p, double lambda) {
  p.lambdas.assign(std::max(0, p.levels() - 1), lambda);
}

std::vector<AblationRow> ablation_rows(const ExperimentConfig& base, const std::string& axis) {
  const auto ref = reference_tpn(base);
  const double lambda = ref.lambdas.empty() ? 0.5 : ref.lambdas.front();
  std::vector<AblationRow> rows;
  auto with = [&](const std::string& label, std::optional<pyramid::PyramidConfig> p) {
    ExperimentConfig cfg = base;
    cfg.tpn = std::move(p);
    rows.push_back({label, cfg});
  };
  if (axis == "sources") {
    with("none", std::nullopt);
    const std::vector<std::pair<std::vector<int>, std::vector<int>>> multi = {
        {{2, 3, 4, 5}, {1, 2, 4, 8}}, {{3, 4, 5}, {2, 4, 8}}, {{4, 5}, {4, 8}}};
    for (const auto& [stages, alphas] : multi) {
      auto p = ref;
      p.source_mode = pyramid::SourceMode::kMultiDepth;
      p.stages = stages;
      p.rates.clear();
      p.alphas = alphas;
      set_levels(p, lambda);
      std::string label = "res";
      for (int s : stages) label += std::to_string(s);
      with(label, p);
    }
    auto single = ref;
    single.source_mode = pyramid::SourceMode::kSingleDepth;
    single.stages = {5};
    single.rates = {1, 2, 4, 8};
    single.alphas = {1, 1, 1, 1};
    set_levels(single, lambda);
    with("res5", single);
  } else if (axis == "components") {
    with("baseline", std::nullopt);
    struct Switches {
      const char* label;
      bool head, spatial, temporal, flow;
    };
    const Switches grid[] = {{"head", true, false, false, false},
                             {"head+spatial", true, true, false, false},
                             {"head+spatial+temporal", true, true, true, false},
                             {"head+spatial+temporal+flow", true, true, true, true},
                             {"spatial+temporal+flow", false, true, true, true},
                             {"temporal+flow", false, false, true, true}};
    for (const auto& s : grid) {
      auto p = ref;
      p.aux_heads = s.head;
      p.spatial_convs = s.spatial;
      p.temporal_modulation = s.temporal;
      p.flow = s.flow ? ref.flow : pyramid::FlowKind::kIsolation;
      with(s.label, p);
    }
  } else if (axis == "flows") {
    for (auto flow : pyramid::kAllFlows) {
      auto p = ref;
      p.flow = flow;
      with(to_string(flow), p);
    }
  } else if (axis == "frames") {
    if (base.backbone.kind != backbone::BackboneKind::kConv3d) {
      throw ConfigError("backbone.kind", "the frames axis needs a conv3d backbone");
    }
    const std::pair<int, int> schemes[] = {{8, 8}, {16, 4}, {32, 2}};
    for (const auto& [t, tau] : schemes) {
      const std::string tag = std::to_string(t) + "x" + std::to_string(tau);
      for (bool use_tpn : {false, true}) {
        ExperimentConfig cfg = base;
        cfg.backbone.input_frames = t;
        cfg.data.sampling = data::SampleScheme::windowed(t, tau, base.data.sampling.window);
        cfg.tpn = use_tpn ? std::optional(ref) : std::nullopt;
        rows.push_back({tag + (use_tpn ? "/tpn" : "/base"), cfg});
      }
    }
  } else {
    throw ArgumentError("unknown ablation axis '" + axis + "'");
  }
  for (auto& r : rows) {
    try {
      r.cfg.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.field(), "ablation row '" + r.label + "': " + e.what());
    }
  }
  return rows;
}

int cmd_ablate(const Common& c, const std::string& axis, std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path dir = c.out.empty() ? cfg.out_dir : fs::path(c.out);
  const auto rows = ablation_rows(cfg, axis);
  const fs::path axis_dir = dir / ("ablate_" + axis);
  if (non_empty_dir(axis_dir) && !c.force) {
    throw Refusal(axis_dir.string() + " is not empty; pass --force to overwrite");
  }
  const auto train_set = load_split(cfg, "train");
  const auto val = load_split(cfg, "val");
  if (fs::exists(axis_dir)) fs::remove_all(axis_dir);
  write_lock(dir, cfg);

  std::ostringstream csv;
  csv.precision(17);
  csv << "row,top1,top5\n";
  for (const auto& row : rows) {
    std::string safe = row.label;
    std::replace(safe.begin(), safe.end(), '/', '_');
    std::replace(safe.begin(), safe.end(), '+', '_');
    const fs::path row_dir = axis_dir / safe;
    make_dir(row_dir);
    write_lock(row_dir, row.cfg);
    std::ostringstream sink;
    const auto outcome = train_into(row.cfg, row_dir, train_set, &val, std::nullopt, sink);
    write_json(row_dir / "eval.json", train::to_json(outcome.report));
    csv << row.label << ',' << outcome.report.top1 << ',' << outcome.report.top5 << '\n';
    out << row.label << "\ttop1 " << outcome.report.top1 << "\ttop5 " << outcome.report.top5
        << '\n';
  }
  write_text(dir / ("ablation_" + axis + ".csv"), csv.str());
  return kOk;
}

// ---- analyze ---------------------------------------------------------------------------------

struct TrainedModel {
  ExperimentConfig cfg;
  std::unique_ptr<Recognizer> model;
};

TrainedModel load_trained(const fs::path& where) {
  fs::path run = where;
  fs::path ckpt = where / "checkpoint";
  if (!fs::exists(run / "config.lock") && fs::exists(where / kManifestFile)) {
    run = where.parent_path();
    ckpt = where;
  }
  if (!fs::exists(run / "config.lock")) {
    throw IoError((run / "config.lock").string(), "not a training output directory");
  }
  TrainedModel t{load_config(run / "config.lock"), nullptr};
  t.cfg.validate();
  t.model = std::make_unique<Recognizer>(t.cfg.model_spec());
  auto params = t.model->parameters();
  load_checkpoint(ckpt, params);
  return t;
}

int cmd_analyze(const Common& c, const std::string& base_dir, const std::string& tpn_dir,
                const std::string& tempo_dir, std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path dir = c.out.empty() ? cfg.out_dir : fs::path(c.out);
  auto base = load_trained(base_dir);
  auto tpn = load_trained(tpn_dir);
  std::optional<TrainedModel> tempo_model;
  if (!tempo_dir.empty()) tempo_model = load_trained(tempo_dir);
  TrainedModel& framer = tempo_model ? *tempo_model : base;
  const char* framer_flag = tempo_model ? "--tempo-model" : "--base";
  if (framer.model->has_pyramid()) {
    throw ConfigError(framer_flag, "the per-frame tempo measurement needs a model without a pyramid");
  }
  if (base.cfg.data.synthetic.num_classes != cfg.data.synthetic.num_classes ||
      tpn.cfg.data.synthetic.num_classes != cfg.data.synthetic.num_classes ||
      framer.cfg.data.synthetic.num_classes != cfg.data.synthetic.num_classes) {
    throw ConfigError("data.synthetic.num_classes", "models and config disagree on classes");
  }
  const auto val = load_split(cfg, "val");
  make_dir(dir);
  write_lock(dir, cfg);

  const auto records = tempo::tempo_records(*framer.model, val, framer.cfg.backbone.input_size);
  tempo::write_tempo_records(dir / "tempo_records.csv", records);
  const auto stats = tempo::class_tempo_variance(records);
  tempo::write_class_variance(dir / "class_variance.csv", stats);

  auto evaluate = [&](TrainedModel& m) {
    return train::evaluate(*m.model, val, m.cfg.pipeline(), cfg.eval.crop,
                           cfg.eval.clips_per_video, cfg.eval.batch_size);
  };
  const auto base_report = evaluate(base);
  const auto tpn_report = evaluate(tpn);
  write_json(dir / "eval_base.json", train::to_json(base_report));
  write_json(dir / "eval_tpn.json", train::to_json(tpn_report));

  json summary = {{"base_top1", base_report.top1}, {"tpn_top1", tpn_report.top1}};
  auto sweep = [&](TrainedModel& m, const fs::path& file, const char* key) {
    std::vector<tempo::RobustnessEntry> entries;
    if (m.cfg.data.sampling.mode == data::SampleMode::kWindowed) {
      entries = tempo::robustness_sweep(*m.model, val, m.cfg.pipeline(), cfg.analysis.strides,
                                        m.cfg.data.sampling.frames, cfg.eval.crop,
                                        cfg.eval.clips_per_video);
    } else {
      for (int s : cfg.analysis.strides) entries.push_back({s, std::nullopt, "segment sampling"});
    }
    tempo::write_robustness(file, entries);
    bool any = false;
    for (const auto& e : entries) any = any || e.top1.has_value();
    summary[key] = any ? json(tempo::accuracy_spread(entries)) : json(nullptr);
  };
  sweep(tpn, dir / "robustness.csv", "tpn_spread");
  sweep(base, dir / "robustness_base.csv", "base_spread");
  write_json(dir / "summary.json", summary);

  const auto gains = tempo::gain_vs_variance(stats, base_report, tpn_report,
                                             cfg.analysis.bin_width, cfg.analysis.fit_over);
  tempo::write_gain_bins(dir / "gain_vs_variance.csv", gains.bins);
  tempo::write_fit(dir / "fit.json", gains.fit);
  summary["slope"] = gains.fit.slope;
  summary["pearson_r"] = gains.fit.pearson_r;
  summary["num_bins"] = gains.bins.size();
  write_json(dir / "summary.json", summary);
  out << "base top1 " << base_report.top1 << ", tpn top1 " << tpn_report.top1 << ", slope "
      << gains.fit.slope << ", r " << gains.fit.pearson_r << " over " << gains.bins.size()
      << " bins\n";
  return kOk;
}

// ---- gradcheck -------------------------------------------------------------------------------

int cmd_gradcheck(const Common& c, int batch, double step, int64_t coords, double tol,
                  std::ostream& out) {
  ExperimentConfig cfg = load(c);
  const fs::path dir = c.out.empty() ? cfg.out_dir : fs::path(c.out);
  if (batch < 1) throw ArgumentError("--batch must be positive");
  cfg.train.dropout = 0.0;
  if (cfg.tpn) cfg.tpn->dropout = 0.0;
  Recognizer model(cfg.model_spec());

  const auto& bb = cfg.backbone;
  const nn::Shape shape =
      bb.kind == backbone::BackboneKind::kConv3d
          ? nn::Shape{batch, bb.in_channels, bb.input_frames, bb.input_size, bb.input_size}
          : nn::Shape{batch, bb.input_frames, bb.in_channels, bb.input_size, bb.input_size};
  nn::Tensor input(shape);
  std::mt19937_64 rng(nn::derive_seed(cfg.train.seed, "gradcheck/input"));
  std::normal_distribution<double> normal;
  for (double& v : input.data()) v = normal(rng);
  std::vector<int> labels;
  for (int i = 0; i < batch; ++i) labels.push_back(i % cfg.data.synthetic.num_classes);

  auto loss = [&] { return model.loss(model.forward(input, /*training=*/true), labels); };
  const auto r = train::gradcheck(loss, model.parameters(), step, coords, cfg.train.seed);
  make_dir(dir);
  write_lock(dir, cfg);
  const json report = {{"max_rel_error", r.max_rel_error},
                       {"coords_checked", r.coords_checked},
                       {"kink_coords", r.kink_coords},
                       {"smooth_max_rel_error", r.smooth_max_rel_error},
                       {"worst_param", r.worst_param},
                       {"worst_index", r.worst_index},
                       {"step", step},
                       {"parameters", nn::count_trainable(model.parameters())}};
  write_json(dir / "gradcheck.json", report);
  out << report.dump(2) << '\n';
  if (!(r.max_rel_error < tol)) {
    throw NumericError("max relative error " + std::to_string(r.max_rel_error) +
                       " exceeds " + std::to_string(tol));
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal pyramid experiments on synthetic tempo-controlled videos", "tpn"};
  app.require_subcommand(1);

  Common gen, tr, ev, ab, an, gc;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate and store a synthetic dataset");
  add_common(gen_cmd, gen);

  std::string resume;
  auto* train_cmd = app.add_subcommand("train", "train a baseline or pyramid model");
  add_common(train_cmd, tr);
  train_cmd->add_option("--resume", resume, "checkpoint directory to continue from");

  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the val split");
  add_common(eval_cmd, ev);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint directory");

  std::string axis;
  auto* ablate_cmd = app.add_subcommand("ablate", "run one ablation axis");
  add_common(ablate_cmd, ab);
  ablate_cmd->add_option("--axis", axis, "sources | components | flows | frames")
      ->required()
      ->check(CLI::IsMember({"sources", "components", "flows", "frames"}));

  std::string base_dir, tpn_dir, tempo_dir;
  auto* analyze_cmd = app.add_subcommand("analyze", "tempo analysis of a baseline/pyramid pair");
  add_common(analyze_cmd, an);
  analyze_cmd->add_option("--base", base_dir, "baseline training output")->required();
  analyze_cmd->add_option("--tpn", tpn_dir, "pyramid training output")->required();
  analyze_cmd->add_option("--tempo-model", tempo_dir,
                          "single-frame classifier for the tempo curves (default: --base)");

  int batch = 2;
  double step = 1e-3;
  int64_t coords = 0;
  double tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gc_cmd, gc);
  gc_cmd->add_option("--batch", batch, "batch size");
  gc_cmd->add_option("--step", step, "finite-difference step");
  gc_cmd->add_option("--coords", coords, "coordinates to sample (0 = all)");
  gc_cmd->add_option("--tol", tol, "maximum relative error");

  std::vector<std::string> argv_store{"tpn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (train_cmd->parsed()) return cmd_train(tr, resume, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, checkpoint, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ab, axis, out);
    if (analyze_cmd->parsed()) return cmd_analyze(an, base_dir, tpn_dir, tempo_dir, out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc, batch, step, coords, tol, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const Refusal& e) {
    err << "refusing: " << e.what() << '\n';
    return kValidation;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kValidation;
}

}  // namespace tpn::cli
