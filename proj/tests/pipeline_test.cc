#include <gtest/gtest.h>

#include "qreadout/errors.h"
#include "qreadout/eval.h"
#include "qreadout/pipeline.h"

namespace qreadout::clf {
namespace {

sim::SimConfig quiet_config() {
  sim::SimConfig cfg;
  cfg.t1 = {std::nullopt, std::nullopt};
  cfg.noise_sigma = 2.0;
  cfg.seed = 99;
  return cfg;
}

nn::TrainConfig short_training() {
  nn::TrainConfig t;
  t.lr0 = 1e-2;
  t.epochs = 6;
  t.batch_size = 32;
  return t;
}

TEST(Presets, AllValidateAndHaveExpectedNames) {
  EXPECT_EQ(gmm_pipeline().name, "gmm");
  EXPECT_EQ(filter_lstm_pipeline().name, "filter+lstm");
  for (const auto& p : {gmm_pipeline(), lstm_pipeline(), path_lstm_pipeline(), filter_lstm_pipeline(),
                        dense_pipeline(), filter_dense_pipeline(), signature_dense_pipeline()}) {
    EXPECT_NO_THROW(p.validate()) << p.name;
    EXPECT_DOUBLE_EQ(p.demod_frequency(), 0.1);
  }
}

TEST(Descriptor, RejectsBadStageOrders) {
  PipelineDescriptor d = gmm_pipeline();
  d.stages = {IntegrateStage{}, DemodulateStage{0.1}};
  EXPECT_THROW(d.validate(), ConfigError);
  d = lstm_pipeline();
  d.stages.push_back(IntegrateStage{});
  EXPECT_THROW(d.validate(), ConfigError);
  d = gmm_pipeline();
  d.stages.pop_back();
  EXPECT_THROW(d.validate(), ConfigError);
  d = filter_lstm_pipeline();
  d.stages.insert(d.stages.begin(), BandpassStage{0.001, 0.005});
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Features, ShapesPerPipeline) {
  const auto cfg = quiet_config();
  const auto ds = sim::generate_dataset(cfg, 1, 1);
  const auto& samples = ds.shots[0].samples;
  EXPECT_EQ(model_features(lstm_pipeline(), samples, cfg.dt()).size(), 160u);
  EXPECT_EQ(model_features(filter_lstm_pipeline(), samples, cfg.dt()).size(), 160u);
  EXPECT_EQ(model_features(signature_dense_pipeline(), samples, cfg.dt()).size(), 63u);
  EXPECT_TRUE(run_stages(gmm_pipeline(), samples, cfg.dt()).integrated);
}

TEST(Train, GmmOnQuietDataIsNearPerfect) {
  const auto ds = sim::generate_dataset(quiet_config(), 200, 1);
  const auto sp = eval::split(ds, 0.8, 1);
  const auto model = train_pipeline(ds, sp.train, gmm_pipeline(), nn::TrainConfig{});
  EXPECT_EQ(model.param_count(), 18u);
  const auto report = eval::evaluate(model, ds, sp.test);
  EXPECT_GE(report.average_fidelity, 0.99);
}

TEST(Train, FilterLstmLearnsQuietData) {
  const auto ds = sim::generate_dataset(quiet_config(), 150, 1);
  const auto sp = eval::split(ds, 0.8, 1);
  const auto model = train_pipeline(ds, sp.train, filter_lstm_pipeline(), short_training());
  EXPECT_EQ(model.param_count(), 1264u);
  EXPECT_GE(eval::evaluate(model, ds, sp.test).average_fidelity, 0.9);
}

TEST(Train, DenseParamCountTracksInput) {
  const auto ds = sim::generate_dataset(quiet_config(), 20, 1);
  nn::TrainConfig t = short_training();
  t.epochs = 1;
  EXPECT_EQ(train_pipeline(ds, {}, dense_pipeline(), t).param_count(), 32u * 160 + 723);
  EXPECT_EQ(train_pipeline(ds, {}, signature_dense_pipeline(), t).param_count(), 32u * 63 + 723);
}

TEST(Train, DeterministicAcrossThreadCounts) {
  const auto ds = sim::generate_dataset(quiet_config(), 30, 1);
  nn::TrainConfig t = short_training();
  t.epochs = 2;
  TrainOptions one{1, {}};
  TrainOptions four{4, {}};
  const auto a = train_pipeline(ds, {}, filter_lstm_pipeline(), t, one);
  const auto b = train_pipeline(ds, {}, filter_lstm_pipeline(), t, four);
  const auto& pa = std::get<nn::LstmParams>(a.model).values();
  const auto& pb = std::get<nn::LstmParams>(b.model).values();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) {
    ASSERT_EQ(pa[k], pb[k]);
  }
}

TEST(Predict, IncompatibleShapesRejected) {
  const auto ds = sim::generate_dataset(quiet_config(), 20, 1);
  const auto model = train_pipeline(ds, {}, gmm_pipeline(), nn::TrainConfig{});
  sim::SimConfig other = quiet_config();
  other.duration_ns = 800;
  const auto ds2 = sim::generate_dataset(other, 2, 1);
  EXPECT_THROW(predict(model, ds2.shots[0], other.sample_rate), IncompatibilityError);
  EXPECT_THROW(check_compatible(model, ds2), IncompatibilityError);
  EXPECT_THROW(predict(model, ds.shots[0], 4.0), IncompatibilityError);
  const auto p = predict(model, ds.shots[0], ds.sample_rate());
  EXPECT_NEAR(p.probs[0] + p.probs[1] + p.probs[2], 1.0, 1e-12);
}

TEST(Weighting, ConfidentDataMatchesUniformTraining) {
  // With well separated clusters every GMM posterior is ~1, so confidence
  // weights are ~1 and the normalized loss matches the unweighted one.
  const auto ds = sim::generate_dataset(quiet_config(), 20, 1);
  nn::TrainConfig t = short_training();
  t.epochs = 2;
  PipelineDescriptor d = filter_lstm_pipeline();
  d.weighting = UniformWeighting{};
  const auto uniform = std::get<nn::LstmParams>(train_pipeline(ds, {}, d, t).model);
  const auto weighted = std::get<nn::LstmParams>(train_pipeline(ds, {}, filter_lstm_pipeline(), t).model);
  for (std::size_t k = 0; k < uniform.values().size(); ++k) {
    EXPECT_NEAR(uniform.values()[k], weighted.values()[k], 1e-6);
  }
}

}  // namespace
}  // namespace qreadout::clf
