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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tpn/config.hpp"
#include "tpn/error.hpp"
#include "tpn/tempo.hpp"

namespace {

using tpn::tempo::ClassTempoStats;
using tpn::tempo::TempoRecord;
using tpn::train::EvalReport;

std::vector<double> random_curve(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 80);
  std::uniform_int_distribution<int> shape(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = len(rng);
  std::vector<double> v(static_cast<size_t>(n));
  switch (shape(rng)) {
    case 0:  // white noise
      for (auto& x : v) x = u(rng);
      break;
    case 1: {  // one bump
      const double c = u(rng) * n;
      const double w = 0.5 + u(rng) * n / 3.0;
      for (int i = 0; i < n; ++i) v[i] = std::exp(-0.5 * std::pow((i - c) / w, 2)) + 0.05 * u(rng);
      break;
    }
    case 2: {  // two bumps
      const double c1 = u(rng) * n, c2 = u(rng) * n;
      for (int i = 0; i < n; ++i) {
        v[i] = std::exp(-0.5 * std::pow((i - c1) / 3.0, 2)) +
               0.8 * std::exp(-0.5 * std::pow((i - c2) / 2.0, 2));
      }
      break;
    }
    default:  // plateaus with exact ties at the half level
      for (auto& x : v) x = std::floor(u(rng) * 5.0) / 4.0;
      break;
  }
  return v;
}

EvalReport report(std::map<int, double> per_class) {
  EvalReport r;
  r.per_class_top1 = std::move(per_class);
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---- fwhm ------------------------------------------------------------------------

TEST(Fwhm, Examples) {
  const std::vector<double> tri{0.1, 0.5, 1.0, 0.5, 0.1};
  EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(tri), 2.0);
  const std::vector<double> flat(8, 0.3);
  EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(flat), 7.0);
  const std::vector<double> zeros(12, 0.0);
  EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(zeros), 11.0);
  const std::vector<double> one{0.4};
  EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(one), 0.0);
}

TEST(Fwhm, InterpolatesBetweenSamples) {
  // half = 0.5; crossings at 1 + 0.3 / 0.4 and 4 + 0.3 / 0.6.
  const std::vector<double> v{0.0, 0.2, 0.6, 1.0, 0.8, 0.2};
  EXPECT_NEAR(tpn::tempo::fwhm(v), 4.5 - 1.75, 1e-15);
}

TEST(Fwhm, OutermostCrossingsForTwoPeaks) {
  const std::vector<double> v{0.0, 1.0, 0.0, 0.0, 0.9, 0.0};
  EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(v), (4.0 + 0.4 / 0.9) - 0.5);
}

TEST(Fwhm, Errors) {
  EXPECT_THROW(tpn::tempo::fwhm(std::vector<double>{}), tpn::ArgumentError);
  EXPECT_THROW(tpn::tempo::fwhm(std::vector<double>{0.1, NAN}), tpn::NumericError);
}

TEST(Fwhm, MatchesOracleOnRandomCurves) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_curve(rng);
    ASSERT_NEAR(tpn::tempo::fwhm(v), tpn::oracle::fwhm(v), 1e-9) << "trial " << trial;
  }
}

TEST(Fwhm, BoundedByLength) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_curve(rng);
    const double w = tpn::tempo::fwhm(v);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, static_cast<double>(v.size() - 1));
  }
}

TEST(Fwhm, ReflectionInvariantExactly) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = random_curve(rng);
    const double w = tpn::tempo::fwhm(v);
    std::reverse(v.begin(), v.end());
    EXPECT_EQ(tpn::tempo::fwhm(v), w) << "trial " << trial;
  }
}

TEST(Fwhm, PowerOfTwoScalingExact) {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_curve(rng);
    const double w = tpn::tempo::fwhm(v);
    for (double c : {0.125, 0.5, 2.0, 64.0}) {
      auto s = v;
      for (auto& x : s) x *= c;
      EXPECT_EQ(tpn::tempo::fwhm(s), w) << "trial " << trial << " c " << c;
    }
  }
}

TEST(Fwhm, ArbitraryScalingWithinRounding) {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = random_curve(rng);
    const double w = tpn::tempo::fwhm(v);
    const double c = scale(rng);
    auto s = v;
    for (auto& x : s) x *= c;
    EXPECT_NEAR(tpn::tempo::fwhm(s), w, 1e-9) << "trial " << trial << " c " << c;
  }
}

// ---- class variance -----------------------------------------------------------------

TEST(ClassVariance, Examples) {
  const std::vector<TempoRecord> records{{"a", 0, 2.0}, {"b", 0, 2.0}, {"c", 0, 2.0},
                                         {"d", 1, 1.0}, {"e", 1, 3.0}};
  const auto stats = tpn::tempo::class_tempo_variance(records);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0].class_id, 1);
  EXPECT_DOUBLE_EQ(stats[0].variance, 1.0);
  EXPECT_EQ(stats[0].count, 2);
  EXPECT_EQ(stats[1].class_id, 0);
  EXPECT_DOUBLE_EQ(stats[1].variance, 0.0);
  EXPECT_EQ(stats[1].count, 3);
}

TEST(ClassVariance, SortedDescending) {
  std::mt19937_64 rng(106);
  std::normal_distribution<double> n(20.0, 1.0);
  std::vector<TempoRecord> records;
  for (int cls = 0; cls < 7; ++cls) {
    for (int i = 0; i < 10; ++i) records.push_back({"v", cls, n(rng) * (1.0 + cls % 3)});
  }
  const auto stats = tpn::tempo::class_tempo_variance(records);
  ASSERT_EQ(stats.size(), 7u);
  for (size_t i = 1; i < stats.size(); ++i) EXPECT_GE(stats[i - 1].variance, stats[i].variance);
}

TEST(ClassVariance, PermutationInvariant) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  std::vector<TempoRecord> records;
  for (int i = 0; i < 200; ++i) records.push_back({"v" + std::to_string(i), i % 5, u(rng)});
  const auto ref = tpn::tempo::class_tempo_variance(records);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(records.begin(), records.end(), rng);
    const auto got = tpn::tempo::class_tempo_variance(records);
    ASSERT_EQ(got.size(), ref.size());
    for (size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(got[i].class_id, ref[i].class_id);
      EXPECT_EQ(got[i].variance, ref[i].variance);
      EXPECT_EQ(got[i].count, ref[i].count);
    }
  }
}

// ---- least squares and gain bins ----------------------------------------------------

TEST(LeastSquares, PerfectLine) {
  const std::vector<double> x{5.0, 15.0, 25.0, 35.0};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * v);
  const auto fit = tpn::tempo::least_squares(x, y);
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(fit.pearson_r, 1.0);
}

TEST(LeastSquares, ConstantResponse) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> y{0.25, 0.25, 0.25};
  const auto fit = tpn::tempo::least_squares(x, y);
  EXPECT_EQ(fit.slope, 0.0);
  EXPECT_EQ(fit.pearson_r, 0.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 0.25);
}

TEST(LeastSquares, Errors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(tpn::tempo::least_squares(one, one), tpn::ArgumentError);
  const std::vector<double> same{2.0, 2.0};
  const std::vector<double> y{1.0, 3.0};
  EXPECT_THROW(tpn::tempo::least_squares(same, y), tpn::ArgumentError);
  EXPECT_THROW(tpn::tempo::least_squares(y, one), tpn::ArgumentError);
}

TEST(GainVariance, IdenticalReportsGiveZeroSlope) {
  const std::vector<ClassTempoStats> stats{{0, 3.0, 5}, {1, 14.0, 5}, {2, 27.0, 5}};
  const auto r = report({{0, 0.5}, {1, 0.75}, {2, 1.0}});
  const auto g = tpn::tempo::gain_vs_variance(stats, r, r, 10.0);
  ASSERT_EQ(g.bins.size(), 3u);
  for (const auto& b : g.bins) EXPECT_EQ(b.mean_gain, 0.0);
  EXPECT_EQ(g.fit.slope, 0.0);
  EXPECT_EQ(g.fit.pearson_r, 0.0);
}

TEST(GainVariance, BinsAndMeans) {
  const std::vector<ClassTempoStats> stats{{0, 3.0, 5}, {1, 7.0, 5}, {2, 27.0, 5}, {3, 55.0, 5}};
  const auto base = report({{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}});
  const auto tpn = report({{0, 0.6}, {1, 0.8}, {2, 0.5}, {3, 0.25}});
  const auto g = tpn::tempo::gain_vs_variance(stats, base, tpn, 10.0);
  ASSERT_EQ(g.bins.size(), 3u);
  EXPECT_EQ(g.bins[0].variance_lo, 0.0);
  EXPECT_EQ(g.bins[0].num_classes, 2);
  EXPECT_NEAR(g.bins[0].mean_gain, 0.2, 1e-15);
  EXPECT_EQ(g.bins[1].variance_lo, 20.0);
  EXPECT_EQ(g.bins[2].variance_lo, 50.0);
  EXPECT_DOUBLE_EQ(g.bins[2].mean_gain, -0.25);
  for (const auto& b : g.bins) EXPECT_EQ(b.variance_hi - b.variance_lo, 10.0);
  ASSERT_EQ(g.class_gains.size(), 4u);
  EXPECT_EQ(g.class_gains[3].first, 3);
}

TEST(GainVariance, BinMeansOnALine) {
  // Bin centres 5, 15, 25 with gains 10, 30, 50: y = 2x.
  const std::vector<ClassTempoStats> stats{{0, 1.0, 1}, {1, 12.0, 1}, {2, 29.0, 1}};
  const auto base = report({{0, 0.0}, {1, 0.0}, {2, 0.0}});
  const auto tpn = report({{0, 10.0}, {1, 30.0}, {2, 50.0}});
  const auto g = tpn::tempo::gain_vs_variance(stats, base, tpn, 10.0);
  EXPECT_DOUBLE_EQ(g.fit.slope, 2.0);
  EXPECT_DOUBLE_EQ(g.fit.pearson_r, 1.0);
}

TEST(GainVariance, SwapNegatesExactly) {
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ClassTempoStats> stats;
    std::map<int, double> a, b;
    for (int c = 0; c < 8; ++c) {
      stats.push_back({c, u(rng) * 80.0, 10});
      a[c] = std::round(u(rng) * 50.0) / 50.0;
      b[c] = std::round(u(rng) * 50.0) / 50.0;
    }
    const auto ra = report(a), rb = report(b);
    tpn::tempo::GainAnalysis fwd, rev;
    try {
      fwd = tpn::tempo::gain_vs_variance(stats, ra, rb, 10.0);
    } catch (const tpn::ArgumentError&) {
      continue;  // every class landed in one bin
    }
    rev = tpn::tempo::gain_vs_variance(stats, rb, ra, 10.0);
    ASSERT_EQ(fwd.bins.size(), rev.bins.size());
    for (size_t i = 0; i < fwd.bins.size(); ++i) {
      EXPECT_EQ(rev.bins[i].mean_gain, -fwd.bins[i].mean_gain);
    }
    for (size_t i = 0; i < fwd.class_gains.size(); ++i) {
      EXPECT_EQ(rev.class_gains[i].second, -fwd.class_gains[i].second);
    }
    EXPECT_EQ(rev.fit.slope, -fwd.fit.slope);
    EXPECT_EQ(rev.fit.pearson_r, -fwd.fit.pearson_r);
  }
}

TEST(GainVariance, FitOverClasses) {
  const std::vector<ClassTempoStats> stats{{0, 1.0, 1}, {1, 2.0, 1}, {2, 3.0, 1}};
  const auto base = report({{0, 0.0}, {1, 0.0}, {2, 0.0}});
  const auto tpn = report({{0, 0.1}, {1, 0.2}, {2, 0.3}});
  // One bin only: the bin fit is undefined, the per-class fit is not.
  EXPECT_THROW(tpn::tempo::gain_vs_variance(stats, base, tpn, 10.0), tpn::ArgumentError);
  const auto g =
      tpn::tempo::gain_vs_variance(stats, base, tpn, 10.0, tpn::tempo::FitOver::kClasses);
  EXPECT_NEAR(g.fit.slope, 0.1, 1e-15);
  EXPECT_NEAR(g.fit.pearson_r, 1.0, 1e-15);
}

TEST(GainVariance, Errors) {
  const std::vector<ClassTempoStats> stats{{0, 1.0, 1}, {1, 25.0, 1}};
  const auto full = report({{0, 0.5}, {1, 0.5}});
  const auto partial = report({{0, 0.5}});
  EXPECT_THROW(tpn::tempo::gain_vs_variance(stats, full, partial, 10.0), tpn::ArgumentError);
  EXPECT_THROW(tpn::tempo::gain_vs_variance(stats, full, full, 0.0), tpn::ConfigError);
  EXPECT_THROW(tpn::tempo::gain_vs_variance(stats, full, full, -1.0), tpn::ConfigError);
}

// ---- per-frame probabilities ------------------------------------------------------------

namespace {

tpn::ModelSpec frame_model_spec(int classes) {
  tpn::ModelSpec spec;
  spec.backbone = tpn::backbone::BackboneSpec::toy_2d();
  spec.backbone.input_frames = 1;
  spec.num_classes = classes;
  spec.seed = 5;
  return spec;
}

tpn::data::Dataset small_dataset(int per_class, int len, uint64_t seed) {
  auto s = tpn::data::SyntheticSpec::default_spec(seed);
  s.videos_per_class = per_class;
  s.video_len = len;
  return tpn::data::generate_synthetic(s, "val");
}

}  // namespace

TEST(FrameProbabilities, OneValuePerFrame) {
  tpn::Recognizer model(frame_model_spec(4));
  const auto ds = small_dataset(1, 64, 3);
  const auto curve = tpn::tempo::frame_probabilities(model, ds.videos[0], 32);
  EXPECT_EQ(curve.video_id, ds.videos[0].id);
  ASSERT_EQ(curve.values.size(), 64u);
  for (double p : curve.values) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(FrameProbabilities, ConstantLogitsGiveConstantCurve) {
  tpn::Recognizer model(frame_model_spec(4));
  // With the classifier weights zeroed the logits equal the bias for every
  // frame.
  for (auto& p : model.parameters()) {
    if (p.name.find("fc.weight") != std::string::npos) {
      std::fill(p.tensor.data().begin(), p.tensor.data().end(), 0.0);
    }
    if (p.name.find("fc.bias") != std::string::npos) {
      for (size_t i = 0; i < p.tensor.data().size(); ++i) p.tensor.data()[i] = 0.1 * i;
    }
  }
  const auto ds = small_dataset(1, 40, 4);
  for (const auto& v : ds.videos) {
    const auto curve = tpn::tempo::frame_probabilities(model, v, 32);
    for (double p : curve.values) EXPECT_DOUBLE_EQ(p, curve.values.front());
    EXPECT_DOUBLE_EQ(tpn::tempo::fwhm(curve), 39.0);
  }
}

TEST(FrameProbabilities, RejectsPyramidModel) {
  tpn::ModelSpec spec = frame_model_spec(4);
  spec.backbone = tpn::backbone::BackboneSpec::toy();
  tpn::pyramid::PyramidConfig cfg;
  spec.tpn = cfg;
  tpn::Recognizer model(spec);
  const auto ds = small_dataset(1, 16, 5);
  EXPECT_THROW(tpn::tempo::frame_probabilities(model, ds.videos[0], 32), tpn::ArgumentError);
}

TEST(FrameProbabilities, LabelOutsideModel) {
  tpn::Recognizer model(frame_model_spec(2));
  const auto ds = small_dataset(1, 16, 6);
  EXPECT_THROW(tpn::tempo::frame_probabilities(model, ds.videos.back(), 32), tpn::DataError);
}

// On a trained single-frame classifier the fast twin's high-probability
// region is shorter than the slow twin's. One-sided sign test over pairs.
TEST(FrameProbabilities, FastTwinIsNarrower) {
  const auto cfg = tpn::parse_config(R"(
backbone:
  kind: conv2d_segments
  input_frames: 1
data:
  seed: 11
  val_videos_per_class: 50
  synthetic:
    videos_per_class: 100
    video_len: 128
train:
  lr: 0.01
  epochs: 80
  milestones: [60]
)");
  auto train_spec = cfg.data.synthetic;
  train_spec.seed = cfg.data.seed;
  auto val_spec = train_spec;
  val_spec.videos_per_class = cfg.data.val_videos_per_class;
  const auto train_set = tpn::data::generate_synthetic(train_spec, "train");
  const auto val_set = tpn::data::generate_synthetic(val_spec, "val");

  tpn::Recognizer model(cfg.model_spec());
  tpn::train::SGD sgd(model.parameters(), cfg.train.momentum, cfg.train.weight_decay);
  tpn::train::train(model, sgd, train_set, cfg.train, cfg.pipeline());

  std::vector<double> slow, fast;
  for (const auto& v : val_set.videos) {
    if (v.class_id > 1) continue;
    const double w = tpn::tempo::fwhm(tpn::tempo::frame_probabilities(model, v, 32));
    (v.class_id == 0 ? slow : fast).push_back(w);
  }
  ASSERT_EQ(slow.size(), fast.size());
  const int n = static_cast<int>(slow.size());
  ASSERT_GE(n, 50);
  int narrower = 0;
  for (int i = 0; i < n; ++i) narrower += fast[i] < slow[i] ? 1 : 0;
  // P(X >= narrower) for X ~ Binomial(n, 1/2).
  double tail = 0.0;
  for (int k = narrower; k <= n; ++k) {
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                     n * std::log(2.0));
  }
  EXPECT_LT(tail, 0.01) << narrower << " of " << n << " fast twins narrower";
}

// ---- robustness --------------------------------------------------------------------------

namespace {

tpn::ModelSpec clip_model_spec(int classes) {
  tpn::ModelSpec spec;
  spec.backbone = tpn::backbone::BackboneSpec::toy();
  spec.num_classes = classes;
  spec.seed = 9;
  return spec;
}

tpn::train::InputPipeline clip_pipeline() {
  tpn::train::InputPipeline p;
  p.kind = tpn::backbone::BackboneKind::kConv3d;
  p.scheme = tpn::data::SampleScheme::windowed(8, 8, 64);
  p.crop_size = 32;
  return p;
}

}  // namespace

TEST(Robustness, TrainingStrideMatchesStandardEvaluation) {
  tpn::Recognizer model(clip_model_spec(4));
  const auto ds = small_dataset(3, 128, 7);
  const std::vector<int> strides{2, 8, 16};
  const auto entries = tpn::tempo::robustness_sweep(model, ds, clip_pipeline(), strides, 8,
                                                    tpn::data::CropProtocol::kCenter, 1);
  ASSERT_EQ(entries.size(), 3u);
  const auto standard =
      tpn::train::evaluate(model, ds, clip_pipeline(), tpn::data::CropProtocol::kCenter, 1);
  ASSERT_TRUE(entries[1].top1.has_value());
  EXPECT_EQ(*entries[1].top1, standard.top1);
  for (const auto& e : entries) {
    EXPECT_TRUE(e.top1.has_value()) << e.stride;
    EXPECT_TRUE(e.error.empty());
  }
}

TEST(Robustness, StrideTooLongIsReportedAndSweepContinues) {
  tpn::Recognizer model(clip_model_spec(4));
  const auto ds = small_dataset(1, 64, 8);
  const std::vector<int> strides{2, 10, 4};
  const auto entries = tpn::tempo::robustness_sweep(model, ds, clip_pipeline(), strides, 8,
                                                    tpn::data::CropProtocol::kCenter, 1);
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_TRUE(entries[0].top1.has_value());
  EXPECT_FALSE(entries[1].top1.has_value());
  EXPECT_NE(entries[1].error.find("exceeds"), std::string::npos);
  EXPECT_TRUE(entries[2].top1.has_value());
}

TEST(Robustness, Spread) {
  std::vector<tpn::tempo::RobustnessEntry> e{{2, 0.5, ""}, {4, std::nullopt, "x"}, {6, 0.75, ""},
                                             {8, 0.625, ""}};
  EXPECT_DOUBLE_EQ(tpn::tempo::accuracy_spread(e), 0.25);
  std::vector<tpn::tempo::RobustnessEntry> none{{2, std::nullopt, "x"}};
  EXPECT_THROW(tpn::tempo::accuracy_spread(none), tpn::ArgumentError);
  EXPECT_THROW(tpn::tempo::robustness_sweep(*std::make_unique<tpn::Recognizer>(clip_model_spec(2)),
                                            tpn::data::Dataset{}, clip_pipeline(),
                                            std::vector<int>{2}, 8,
                                            tpn::data::CropProtocol::kCenter, 1),
               tpn::ArgumentError);
}

// ---- writers ------------------------------------------------------------------------------

TEST(Writers, HeadersAndRows) {
  tpn::testing::TempDir dir("tempo_writers");
  const std::vector<TempoRecord> records{{"v0", 1, 2.5}};
  tpn::tempo::write_tempo_records(dir / "t.csv", records);
  EXPECT_EQ(slurp(dir / "t.csv"), "video_id,class_id,fwhm\nv0,1,2.5\n");

  const std::vector<ClassTempoStats> stats{{3, 4.0, 7}, {1, 0.5, 2}};
  tpn::tempo::write_class_variance(dir / "c.csv", stats);
  EXPECT_EQ(slurp(dir / "c.csv"), "class_id,variance,count,rank\n3,4,7,1\n1,0.5,2,2\n");

  const std::vector<tpn::tempo::GainVarianceBin> bins{{10.0, 20.0, 0.25, 3}};
  tpn::tempo::write_gain_bins(dir / "g.csv", bins);
  EXPECT_EQ(slurp(dir / "g.csv"), "bin_lo,bin_hi,mean_gain,num_classes\n10,20,0.25,3\n");

  tpn::tempo::write_fit(dir / "f.json", {2.0, -1.0, 0.5});
  const auto j = nlohmann::json::parse(slurp(dir / "f.json"));
  EXPECT_EQ(j["slope"], 2.0);
  EXPECT_EQ(j["intercept"], -1.0);
  EXPECT_EQ(j["pearson_r"], 0.5);

  const std::vector<tpn::tempo::RobustnessEntry> entries{{2, 0.5, ""}, {16, std::nullopt, "long"}};
  tpn::tempo::write_robustness(dir / "r.csv", entries);
  EXPECT_EQ(slurp(dir / "r.csv"), "stride,top1,error\n2,0.5,\n16,,long\n");

  EXPECT_THROW(tpn::tempo::write_fit(dir / "missing" / "f.json", {}), tpn::IoError);
}
