#include "mienkf/enkf.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace mienkf;

namespace {

EnsembleState ensemble(std::initializer_list<double> values, EnsembleRole role = EnsembleRole::Predicted) {
  EnsembleState e;
  e.particles.resize(static_cast<Eigen::Index>(values.size()), 1);
  int i = 0;
  for (double v : values) e.particles(i++, 0) = v;
  e.role = role;
  return e;
}

PerturbedObs obs(double y, std::initializer_list<double> perturbations) {
  PerturbedObs p;
  p.base_obs = Vector::Constant(1, y);
  p.perturbations.resize(static_cast<Eigen::Index>(perturbations.size()), 1);
  int i = 0;
  for (double v : perturbations) p.perturbations(i++, 0) = v;
  return p;
}

RandomStream stream(std::uint64_t sample) {
  StreamKey k;
  k.seed = 3;
  k.sample = sample;
  return RandomStream(k);
}

const Matrix kOne = Matrix::Identity(1, 1);

}  // namespace

TEST(SampleCov, Divisors) {
  const EnsembleState e = ensemble({-1.0, 1.0});
  EXPECT_DOUBLE_EQ(sample_cov(e, CovDivisor::Biased)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sample_cov(e, CovDivisor::Unbiased)(0, 0), 2.0);
  EXPECT_THROW(sample_cov(ensemble({1.0}), CovDivisor::Biased), ArgumentError);
}

TEST(SampleCov, SymmetricPositiveSemidefinite) {
  auto s = stream(1);
  EnsembleState e;
  e.particles.resize(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 3; ++k) e.particles(i, k) = s.normal();
  const Matrix c = sample_cov(e, CovDivisor::Unbiased);
  EXPECT_TRUE(c.isApprox(c.transpose(), 0.0));
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-14);
}

TEST(KalmanGain, Examples) {
  EXPECT_NEAR(kalman_gain(Matrix::Constant(1, 1, 1.0), kOne, Matrix::Constant(1, 1, 0.1))(0, 0), 10.0 / 11.0,
              1e-15);
  EXPECT_DOUBLE_EQ(kalman_gain(Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1), kOne)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(kalman_gain(Matrix::Zero(1, 1), kOne, kOne)(0, 0), 0.0);
}

TEST(KalmanGain, ShrinksWithObservationNoise) {
  double last = 1.0;
  for (double g : {0.01, 0.1, 1.0, 10.0}) {
    const double k = kalman_gain(Matrix::Constant(1, 1, 0.5), kOne, Matrix::Constant(1, 1, g))(0, 0);
    EXPECT_LT(k, last);
    EXPECT_GT(k, 0.0);
    last = k;
  }
}

TEST(KalmanGain, DimensionMismatch) {
  EXPECT_THROW(kalman_gain(Matrix::Identity(2, 2), kOne, kOne), ArgumentError);
  EXPECT_THROW(kalman_gain(Matrix::Identity(1, 1), kOne, Matrix::Identity(2, 2)), ArgumentError);
}

TEST(UpdateEnsemble, ZeroGainKeepsParticles) {
  const EnsembleState e = ensemble({0.5, -0.2});
  const EnsembleState u = update_ensemble(e, Matrix::Zero(1, 1), kOne, obs(3.0, {0.1, 0.2}));
  EXPECT_DOUBLE_EQ(u.particles(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(u.particles(1, 0), -0.2);
  EXPECT_EQ(u.role, EnsembleRole::Updated);
}

TEST(UpdateEnsemble, UnitGainReplacesWithPerturbedObservations) {
  const EnsembleState u = update_ensemble(ensemble({0.5, -0.2}), kOne, kOne, obs(3.0, {0.1, 0.2}));
  EXPECT_DOUBLE_EQ(u.particles(0, 0), 3.1);
  EXPECT_DOUBLE_EQ(u.particles(1, 0), 3.2);
}

TEST(UpdateEnsemble, GeneralGain) {
  const EnsembleState u = update_ensemble(ensemble({1.0}), Matrix::Constant(1, 1, 0.5), kOne, obs(2.0, {0.0}));
  EXPECT_DOUBLE_EQ(u.particles(0, 0), 1.5);
}

TEST(UpdateEnsemble, ContractsAndCountChecks) {
  EXPECT_THROW(update_ensemble(ensemble({1.0}, EnsembleRole::Updated), kOne, kOne, obs(0.0, {0.0})), ArgumentError);
  EXPECT_THROW(update_ensemble(ensemble({1.0, 2.0}), kOne, kOne, obs(0.0, {0.0})), ArgumentError);
}

TEST(UpdateEnsemble, PermutationEquivariant) {
  auto s = stream(2);
  const int p = 7;
  EnsembleState e;
  e.particles.resize(p, 2);
  PerturbedObs po;
  po.base_obs = Vector::Constant(1, 0.3);
  po.perturbations.resize(p, 1);
  for (int i = 0; i < p; ++i) {
    e.particles(i, 0) = s.normal();
    e.particles(i, 1) = s.normal();
    po.perturbations(i, 0) = s.normal();
  }
  e.role = EnsembleRole::Predicted;
  Matrix h(1, 2);
  h << 1.0, 0.0;
  const Matrix gain = kalman_gain(sample_cov(e, CovDivisor::Unbiased), h, Matrix::Constant(1, 1, 0.1));
  const EnsembleState u = update_ensemble(e, gain, h, po);

  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 2, perm.end());
  EnsembleState ep = e;
  PerturbedObs pp = po;
  for (int i = 0; i < p; ++i) {
    ep.particles.row(i) = e.particles.row(perm[static_cast<std::size_t>(i)]);
    pp.perturbations.row(i) = po.perturbations.row(perm[static_cast<std::size_t>(i)]);
  }
  const Matrix gain_p = kalman_gain(sample_cov(ep, CovDivisor::Unbiased), h, Matrix::Constant(1, 1, 0.1));
  EXPECT_TRUE(gain_p.isApprox(gain, 1e-13));
  const EnsembleState up = update_ensemble(ep, gain_p, h, pp);
  for (int i = 0; i < p; ++i)
    EXPECT_TRUE(up.particles.row(i).isApprox(u.particles.row(perm[static_cast<std::size_t>(i)]), 1e-13));
}

TEST(EstimateQoi, Examples) {
  const EnsembleState e = ensemble({1.0, 2.0, 6.0}, EnsembleRole::Updated);
  EXPECT_DOUBLE_EQ(estimate_qoi(e, Qoi::identity()), 3.0);
  const Qoi square{"sq", [](std::span<const double> u) { return u[0] * u[0]; }};
  EXPECT_NEAR(estimate_qoi(e, square), 41.0 / 3.0, 1e-14);
  EXPECT_THROW(estimate_qoi(ensemble({1.0}), Qoi::identity()), ArgumentError);
}

TEST(InitialEnsemble, MatchesInitialLaw) {
  auto s = stream(3);
  const EnsembleState e = draw_initial_ensemble(make_ou(), 100000, s);
  std::vector<double> x(e.particles.data(), e.particles.data() + e.size());
  const Moments m = moments(x);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se());
  EXPECT_NEAR(m.var, 0.1, 3.0 * m.var_se());
}

TEST(PerturbedObs, CovarianceIsGamma) {
  auto s = stream(4);
  const PerturbedObs p = draw_perturbed_obs(Vector::Constant(1, 2.0), Matrix::Constant(1, 1, std::sqrt(0.1)),
                                            100000, s);
  std::vector<double> x(p.perturbations.data(), p.perturbations.data() + p.size());
  const Moments m = moments(x);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se());
  EXPECT_NEAR(m.var, 0.1, 3.0 * m.var_se());
  EXPECT_DOUBLE_EQ(p.base_obs(0), 2.0);
}

TEST(PredictEnsemble, NeedsOnePathPerParticle) {
  auto s = stream(5);
  const EnsembleState e = ensemble({0.0, 1.0}, EnsembleRole::Updated);
  std::vector<NoisePath> noise{sample_noise(s, 4, 1, 1.0)};
  EXPECT_THROW(predict_ensemble(e, make_ou(), noise), ArgumentError);
  noise.push_back(sample_noise(s, 4, 1, 1.0));
  const EnsembleState p = predict_ensemble(e, make_ou(), noise);
  EXPECT_EQ(p.role, EnsembleRole::Predicted);
  EXPECT_EQ(p.time_index, 1);
  EXPECT_EQ(p.particles(1, 0), propagate(make_ou(), Vector::Constant(1, 1.0), noise[1])(0));
}
