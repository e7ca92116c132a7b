#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "gradcheck.hpp"
#include "sgldreg/diffeo.hpp"
#include "sgldreg/error.hpp"
#include "sgldreg/losses.hpp"
#include "sgldreg/posterior.hpp"

using namespace sgldreg;
using sgldreg::testing::random_tensor;

namespace {

std::vector<VectorField> random_fields(std::size_t k, std::uint64_t seed, std::size_t n = 6) {
  std::vector<VectorField> f;
  for (std::size_t i = 0; i < k; ++i) f.emplace_back(random_tensor({2, n, n}, seed + i, -2, 2));
  return f;
}

double max_abs_diff(const VectorField& a, const VectorField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.tensor().size(); ++i) d = std::max(d, std::abs(a.tensor()[i] - b.tensor()[i]));
  return d;
}

BackboneConfig small_config() {
  BackboneConfig c;
  c.spatial_dims = 2;
  c.encoder_channels = {4, 8};
  c.decoder_channels = {8, 4};
  c.head_init_std = 0.05;
  return c;
}

SnapshotStore small_store(std::size_t k) {
  SnapshotStore s;
  for (std::size_t i = 0; i < k; ++i) s.snapshots.push_back({i, -0.5 - 0.01 * i, init_weights(small_config(), i)});
  return s;
}

}  // namespace

TEST(Posterior, WeightedMeanExamples) {
  const auto f = random_fields(3, 1);
  const std::vector<double> w{1, 2, 3};
  const VectorField m = weighted_mean(f, w);
  for (std::size_t i = 0; i < m.tensor().size(); ++i) {
    const double hand = (f[0].tensor()[i] + 2 * f[1].tensor()[i] + 3 * f[2].tensor()[i]) / 6.0;
    EXPECT_NEAR(m.tensor()[i], hand, 1e-12);
  }
  const std::vector<double> eq{1, 1, 1};
  const VectorField a = weighted_mean(f, eq);
  for (std::size_t i = 0; i < a.tensor().size(); ++i) {
    EXPECT_NEAR(a.tensor()[i], (f[0].tensor()[i] + f[1].tensor()[i] + f[2].tensor()[i]) / 3.0, 1e-12);
  }
  const std::vector<VectorField> two{f[0], f[1]};
  const std::vector<double> lopsided{1.0, 1e-12};
  EXPECT_LT(max_abs_diff(weighted_mean(two, lopsided), f[0]), 1e-10);

  const std::vector<double> zero{0, 0, 0};
  EXPECT_THROW(weighted_mean(f, zero), std::invalid_argument);
  const std::vector<double> short_w{1, 1};
  EXPECT_THROW(weighted_mean(f, short_w), std::invalid_argument);
}

TEST(Posterior, VarianceExamples) {
  VectorField a({1}), b({1});
  b.at(0, 0) = 2.0;
  const std::vector<VectorField> ab{a, b};
  const std::vector<double> eq{1, 1};
  EXPECT_DOUBLE_EQ(variance(ab, eq).at(0, 0), 1.0);

  const auto f = random_fields(1, 2);
  const std::vector<double> one{0.3};
  const VectorField v1 = variance(f, one);
  for (double x : v1.tensor().values()) EXPECT_EQ(x, 0.0);
  const std::vector<VectorField> same(4, f[0]);
  const std::vector<double> w4{1, 2, 3, 4};
  const VectorField v4 = variance(same, w4);
  for (double x : v4.tensor().values()) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Posterior, PermutationScaleAndShiftInvariance) {
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto f = random_fields(5, 10 * trial + 3);
    std::vector<double> w{0.3, 1.2, 0.7, 2.0, 0.05};
    const VectorField m = weighted_mean(f, w), v = variance(f, w);

    std::vector<std::size_t> order{3, 0, 4, 1, 2};
    std::vector<VectorField> pf;
    std::vector<double> pw;
    for (auto i : order) pf.push_back(f[i]), pw.push_back(w[i]);
    EXPECT_LT(max_abs_diff(weighted_mean(pf, pw), m), 1e-12);
    EXPECT_LT(max_abs_diff(variance(pf, pw), v), 1e-12);

    std::vector<double> sw = w;
    for (double& x : sw) x *= 37.5;
    EXPECT_LT(max_abs_diff(variance(f, sw), v), 1e-12);
    EXPECT_LT(max_abs_diff(weighted_mean(f, sw), m), 1e-12);

    auto shifted = f;
    for (auto& s : shifted) {
      for (double& x : s.tensor().values()) x += 1.25;
    }
    EXPECT_LT(max_abs_diff(variance(shifted, w), v), 1e-12);
    const VectorField ms = weighted_mean(shifted, w);
    for (std::size_t i = 0; i < ms.tensor().size(); ++i) EXPECT_NEAR(ms.tensor()[i], m.tensor()[i] + 1.25, 1e-12);
  }
}

TEST(Posterior, UncertaintyFormula) {
  VectorField v({4});
  v.at(0, 0) = 1.0 / (2.0 * std::numbers::pi);
  v.at(0, 1) = std::numbers::e / (2.0 * std::numbers::pi);
  v.at(0, 2) = 0.0;
  v.at(0, 3) = 3.0;
  const VectorField h = uncertainty(v);
  EXPECT_NEAR(h.at(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(h.at(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(h.at(0, 2), 0.5 * std::log(2.0 * std::numbers::pi * 1e-12), 1e-12);
  EXPECT_GT(h.at(0, 3), h.at(0, 1));

  UncertaintyOptions gauss;
  gauss.form = EntropyForm::Gaussian;
  EXPECT_NEAR(uncertainty(v, gauss).at(0, 0), 0.5, 1e-12);
}

TEST(Posterior, SnapshotWeighting) {
  const std::vector<double> losses{-0.8, -0.2, 0.3};
  const auto w = snapshot_weights(losses, SnapshotWeighting::NegativeLoss);
  EXPECT_DOUBLE_EQ(w[0], 0.8);
  EXPECT_DOUBLE_EQ(w[1], 0.2);
  EXPECT_DOUBLE_EQ(w[2], 1e-8);
  const auto s = snapshot_weights(losses, SnapshotWeighting::Softmax);
  EXPECT_NEAR(s[0] + s[1] + s[2], 1.0, 1e-15);
  EXPECT_GT(s[0], s[1]);
  EXPECT_NEAR(s[0] / s[1], std::exp(0.6), 1e-12);
  EXPECT_EQ(parse_snapshot_weighting(to_string(SnapshotWeighting::Softmax)), SnapshotWeighting::Softmax);
}

TEST(Posterior, DeformationUncertainty) {
  const std::size_t n = 16;
  VectorField plus({n, n}), minus({n, n});
  for (std::size_t p = 0; p < n * n; ++p) plus.at(0, p) = 1.5, minus.at(0, p) = -1.5;
  const std::vector<VectorField> pm{plus, minus};
  const std::vector<double> eq{1, 1};
  const VectorField h = deformation_uncertainty(pm, eq, 6);
  const double expected = 0.5 * std::log(2.0 * std::numbers::pi * 2.25);
  for (std::size_t i = 3; i + 3 < n; ++i) {
    for (std::size_t j = 3; j + 3 < n; ++j) EXPECT_NEAR(h.at(0, i * n + j), expected, 1e-6);
  }
  const double floor = 0.5 * std::log(2.0 * std::numbers::pi * 1e-12);
  const std::vector<VectorField> zeros(3, VectorField({n, n}));
  const std::vector<double> w3{1, 2, 3};
  const VectorField hz = deformation_uncertainty(zeros, w3, 6);
  for (double x : hz.tensor().values()) EXPECT_NEAR(x, floor, 1e-12);
}

TEST(Posterior, StoreSamplingAndRegistration) {
  const Volume m(random_tensor({1, 16, 16}, 5, 0, 1)), f(random_tensor({1, 16, 16}, 6, 0, 1));
  const SnapshotStore one = small_store(1);
  const auto v1 = sample_velocities(m, f, one);
  ASSERT_EQ(v1.size(), 1u);
  EXPECT_EQ(v1[0], forward(m, f, one.snapshots[0].weights));
  const RegistrationResult r1 = register_images(m, f, one);
  const VectorField phi = integrate(v1[0], 6);
  EXPECT_EQ(r1.deformation, phi);
  EXPECT_EQ(r1.registered, warp(m, phi));

  const SnapshotStore eight = small_store(8);
  EXPECT_EQ(sample_velocities(m, f, eight).size(), 8u);
  SnapshotStore dup = one;
  for (int i = 0; i < 3; ++i) dup.snapshots.push_back(one.snapshots[0]);
  const auto vd = sample_velocities(m, f, dup);
  for (const auto& v : vd) EXPECT_EQ(v, vd[0]);

  const RegistrationResult a = register_images(m, f, eight), b = register_images(m, f, eight);
  EXPECT_EQ(a.summary.uncertainty, b.summary.uncertainty);
  EXPECT_EQ(a.registered, b.registered);
  for (double x : a.summary.variance.tensor().values()) EXPECT_GE(x, 0.0);

  EXPECT_THROW(sample_velocities(Volume({15, 16}), Volume({15, 16}), one), ShapeError);
  EXPECT_THROW(sample_velocities(m, f, SnapshotStore{}), ConfigError);
}

TEST(Posterior, StoreRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "sgldreg_test_store";
  std::filesystem::remove_all(dir);
  SnapshotStore s = small_store(3);
  s.weighting = SnapshotWeighting::Softmax;
  save_store(dir, s);
  const SnapshotStore r = load_store(dir);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r.weighting, SnapshotWeighting::Softmax);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.snapshots[i].iteration, s.snapshots[i].iteration);
    EXPECT_EQ(r.snapshots[i].validation_loss, s.snapshots[i].validation_loss);
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_store(dir), ConfigError);
}
