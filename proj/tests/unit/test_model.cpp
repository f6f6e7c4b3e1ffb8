#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "../support/series.hpp"
#include "thermocast/checkpoint.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/model.hpp"

using namespace thermocast;
using namespace thermocast::model;

namespace {

windows::WindowSet sample_windows(int n_hours = 60) {
  return windows::make_windows(thermocast::testing::gap_frame(11, 1, n_hours, 0.0));
}

// Inputs kept near unit scale so random weights do not saturate.
windows::WindowSet unit_windows() {
  auto ws = sample_windows();
  for (auto& v : ws.x) v = std::sin(v);
  for (auto& v : ws.last_step) v = std::sin(v);
  return ws;
}

}  // namespace

TEST(Model, ParameterCounts) {
  const Model m(ModelDims{}, 1);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::full)), 23948u);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::lstm_only)), 21272u);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::no_ext)), 23948u - 449u);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::no_phy)), 23948u - 114u);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::no_adv)), 23948u - 2113u);
  EXPECT_EQ(m.parameter_count(flags_of(Variant::no_cal)), 23948u);
}

TEST(Model, VariantNamesRoundTrip) {
  for (const auto v : kAllVariants) EXPECT_EQ(parse_variant(name_of(v)), v);
  EXPECT_EQ(label_of(Variant::no_cal), "AI-Temp (- Cal)");
  EXPECT_EQ(label_of(Variant::lstm_only), "AI-Temp (LSTM)");
  EXPECT_THROW(parse_variant("bogus"), ConfigError);
}

TEST(Model, VariantFlags) {
  const auto lstm = flags_of(Variant::lstm_only);
  EXPECT_FALSE(lstm.adversarial);
  EXPECT_FALSE(lstm.physical);
  EXPECT_FALSE(lstm.external);
  EXPECT_FALSE(flags_of(Variant::no_cal).calibration);
  EXPECT_TRUE(flags_of(Variant::no_cal).adversarial);
}

TEST(Model, ZeroWeightsPersistLastTemperature) {
  const Model m = Model::zeros(ModelDims{});
  const auto ws = sample_windows();
  const auto out = m.forward_one(ws, 0);
  for (const double v : out.y_base) EXPECT_DOUBLE_EQ(v, ws.t_last[0]);
  EXPECT_DOUBLE_EQ(out.s_c, 1.0);
  EXPECT_DOUBLE_EQ(out.s_h, 0.0);
  EXPECT_DOUBLE_EQ(out.delta_ext, 0.0);
  EXPECT_DOUBLE_EQ(out.domain_prob, 0.5);
}

TEST(Model, BaseIsCumulativeSumOfIncrements) {
  Model m = Model::zeros(ModelDims{});
  auto b = m.params().head_b.mutable_values();
  for (std::size_t h = 0; h < b.size(); ++h) b[h] = 0.5;
  const auto ws = sample_windows();
  const auto out = m.forward_one(ws, 0);
  for (std::size_t h = 0; h < 24; ++h) EXPECT_NEAR(out.y_base[h], ws.t_last[0] + 0.5 * (h + 1), 1e-12);
}

TEST(Model, OutputCombinesBranches) {
  // t_last = 20, s_c = 1 + 0.1 tanh(atanh 0.5) = 1.05, s_h = -1, delta = 0.5.
  Model m = Model::zeros(ModelDims{});
  m.params().phy_b2.mutable_values()[0] = std::atanh(0.5);
  m.params().phy_b2.mutable_values()[1] = -1.0;
  m.params().ext_b2.mutable_values()[0] = 0.5;
  auto ws = sample_windows();
  ws.t_last[0] = 20.0;
  const auto out = m.forward_one(ws, 0);
  EXPECT_NEAR(out.s_c, 1.05, 1e-15);
  EXPECT_DOUBLE_EQ(out.s_h, -1.0);
  EXPECT_DOUBLE_EQ(out.delta_ext, 0.5);
  for (const double v : out.y_hat) EXPECT_NEAR(v, 20.5, 1e-12);

  const auto bare = m.forward_one(ws, 0, flags_of(Variant::lstm_only));
  for (const double v : bare.y_hat) EXPECT_DOUBLE_EQ(v, 20.0);
}

TEST(Model, ScaleStaysInBand) {
  Model m = Model::zeros(ModelDims{});
  const auto ws = sample_windows();
  for (const double u : {-1e6, -3.0, 0.0, 3.0, 1e6}) {
    m.params().phy_b2.mutable_values()[0] = u;
    const auto out = m.forward_one(ws, 0);
    EXPECT_GE(out.s_c, 0.9);
    EXPECT_LE(out.s_c, 1.1);
  }
}

TEST(Model, RandomForwardSatisfiesComposition) {
  const Model m(ModelDims{}, 3);
  const auto ws = unit_windows();
  const auto batch = make_batch(ws);
  const auto o = m.forward(batch, 0.0);
  for (std::size_t i = 0; i < batch.size; ++i) {
    for (std::size_t h = 0; h < 24; ++h) {
      const double want = o.y_base.at(i, h) * o.s_c.at(i, 0) + o.delta_ext.at(i, 0) + o.s_h.at(i, 0);
      EXPECT_NEAR(o.y_hat.at(i, h), want, 1e-12);
    }
  }
}

TEST(Model, BranchesAreIsolated) {
  const Model m(ModelDims{}, 5);
  const auto ws = unit_windows();
  const auto before = m.forward_one(ws, 2);

  Model changed = m.clone();
  for (auto& v : changed.params().ext_w2.mutable_values()) v += 0.3;
  for (auto& v : changed.params().phy_w2.mutable_values()) v += 0.3;
  for (auto& v : changed.params().disc_w2.mutable_values()) v += 0.3;
  const auto after = changed.forward_one(ws, 2);
  EXPECT_EQ(before.y_base, after.y_base);
  EXPECT_NE(before.delta_ext, after.delta_ext);
  EXPECT_NE(before.s_c, after.s_c);
  EXPECT_NE(before.domain_prob, after.domain_prob);

  // The context only reaches F_phy.
  auto ws2 = ws;
  for (auto& v : ws2.context) v += 1.0;
  const auto ctx = m.forward_one(ws2, 2);
  EXPECT_EQ(before.y_base, ctx.y_base);
  EXPECT_EQ(before.delta_ext, ctx.delta_ext);
  EXPECT_NE(before.s_h, ctx.s_h);
}

TEST(Model, CloneIsIndependent) {
  const Model m(ModelDims{}, 7);
  Model c = m.clone();
  c.params().head_b.mutable_values()[0] += 1.0;
  EXPECT_NE(m.params().head_b.values()[0], c.params().head_b.values()[0]);
}

TEST(Model, PredictMatchesForwardOne) {
  const Model m(ModelDims{}, 9);
  const auto ws = unit_windows();
  const auto all = predict(m, ws, {}, 4);
  ASSERT_EQ(all.size(), ws.size() * 24);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const auto one = m.forward_one(ws, i);
    for (std::size_t h = 0; h < 24; ++h) EXPECT_NEAR(all[i * 24 + h], one.y_hat[h], 1e-12);
  }
}

TEST(Model, SameSeedSameWeights) {
  const Model a(ModelDims{}, 13), b(ModelDims{}, 13), c(ModelDims{}, 14);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(std::ranges::equal(pa[i].tensor.values(), pb[i].tensor.values())) << pa[i].name;
  }
  EXPECT_FALSE(std::ranges::equal(pa[0].tensor.values(), pc[0].tensor.values()));
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto dir = std::filesystem::temp_directory_path() / "thermocast_ckpt_test";
  std::filesystem::create_directories(dir);
  Checkpoint ck{Model(ModelDims{}, 21), Variant::no_phy, {{"target", "nigeria_synth"}}};
  save_checkpoint(dir / "c.json", ck);
  const auto back = load_checkpoint(dir / "c.json");
  EXPECT_EQ(back.variant, Variant::no_phy);
  EXPECT_EQ(back.metadata["target"], "nigeria_synth");
  EXPECT_EQ(back.model.dims(), ck.model.dims());
  const auto pa = ck.model.parameters(), pb = back.model.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_TRUE(std::ranges::equal(pa[i].tensor.values(), pb[i].tensor.values())) << pa[i].name;
  }
  const auto ws = unit_windows();
  EXPECT_EQ(predict(ck.model, ws), predict(back.model, ws));
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, BadFilesRejected) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), IngestionError);
  auto j = to_json(Checkpoint{Model(ModelDims{}, 1), Variant::full, {}});
  j["version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), IngestionError);
}
