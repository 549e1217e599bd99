#include "mienkf/observations.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

using namespace mienkf;

TEST(Synthesis, ShapesAndEmptyInitialObservation) {
  const ObservationSequence d = synthesize_data(make_ou(), 5, 3);
  EXPECT_EQ(d.horizon, 5);
  ASSERT_EQ(d.truth.size(), 6u);
  ASSERT_EQ(d.obs.size(), 6u);
  EXPECT_EQ(d.obs[0].size(), 0);
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(d.obs[static_cast<std::size_t>(n)].size(), 1);
}

TEST(Synthesis, FixedSeedReproducible) {
  const auto a = synthesize_data(make_double_well(), 4, 8);
  const auto b = synthesize_data(make_double_well(), 4, 8);
  for (int n = 0; n <= 4; ++n) {
    EXPECT_EQ(a.truth[static_cast<std::size_t>(n)], b.truth[static_cast<std::size_t>(n)]);
    EXPECT_EQ(a.obs[static_cast<std::size_t>(n)], b.obs[static_cast<std::size_t>(n)]);
  }
  const auto c = synthesize_data(make_double_well(), 4, 9);
  EXPECT_NE(a.obs[1], c.obs[1]);
}

TEST(Synthesis, NoiselessModeObservesTruth) {
  SynthesisOptions opt;
  opt.noiseless = true;
  const ModelSpec lv = make_langevin();
  const auto d = synthesize_data(lv, 3, 2, opt);
  for (int n = 1; n <= 3; ++n) {
    const auto i = static_cast<std::size_t>(n);
    EXPECT_EQ(d.obs[i], (lv.obs_operator * d.truth[i]).eval());
  }
}

TEST(Synthesis, HorizonMustBePositive) { EXPECT_THROW(synthesize_data(make_ou(), 0, 1), ArgumentError); }

TEST(Synthesis, ObservationNoiseVarianceIsGamma) {
  // 1e5 regenerations: residual y_1 - H u_1 has variance Gamma.
  std::vector<double> r;
  SynthesisOptions opt;
  opt.truth_steps = 4;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    opt.run = i;
    const auto d = synthesize_data(make_ou(), 1, 77, opt);
    r.push_back(d.obs[1](0) - d.truth[1](0));
  }
  const Moments m = moments(r);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se());
  EXPECT_NEAR(m.var, 0.1, 3.0 * m.var_se());
}

TEST(Cholesky, FactorReproducesMatrix) {
  Matrix c(2, 2);
  c << 2.0, 0.3, 0.3, 1.0;
  const Matrix l = cholesky_factor(c);
  EXPECT_TRUE((l * l.transpose()).isApprox(c, 1e-14));
  Matrix bad(1, 1);
  bad << -1.0;
  EXPECT_THROW(cholesky_factor(bad), NumericalError);
}
