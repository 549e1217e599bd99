#include "mienkf/coupling.hpp"
#include "mienkf/observations.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace mienkf;

namespace {

RandomStream stream(std::uint64_t sample, StreamPurpose purpose, std::uint64_t time = 0) {
  StreamKey k;
  k.seed = 17;
  k.purpose = purpose;
  k.sample = sample;
  k.time = time;
  return RandomStream(k);
}

std::set<Member> present(const QuadCoupledState& s) {
  std::set<Member> out;
  for (int k = 0; k < kMemberCount; ++k)
    if (s.has(static_cast<Member>(k))) out.insert(static_cast<Member>(k));
  return out;
}

/// One full predict/update cycle of a coupled state against y.
QuadCoupledState cycle(QuadCoupledState s, const ModelSpec& model, const Vector& y, std::uint64_t sample, int n) {
  auto dyn = stream(sample, StreamPurpose::Dynamics, static_cast<std::uint64_t>(n));
  auto per = stream(sample, StreamPurpose::Perturbation, static_cast<std::uint64_t>(n));
  s = quad_predict(std::move(s), model, dyn);
  const PerturbedObs pobs = draw_perturbed_obs(y, cholesky_factor(model.obs_noise_cov), s.particles(), per);
  return quad_update(std::move(s), model, pobs);
}

QuadCoupledState sampled_state(const ModelSpec& model, MultiIndex idx, Resolution res, std::uint64_t sample,
                               int times = 2, bool equalize = false,
                               CouplingMode mode = CouplingMode::MultiIndex) {
  auto init = stream(sample, StreamPurpose::Initial);
  QuadCoupledState s = init_quad(model, idx, res, init, mode);
  s.equalize_resolution = equalize;
  for (int n = 1; n <= times; ++n) s = cycle(std::move(s), model, Vector::Constant(model.obs_dim(), 0.4), sample, n);
  return s;
}

double mean_of(const QuadCoupledState& s, Member m) { return estimate_qoi(s.at(m).ensemble, Qoi::identity()); }

}  // namespace

TEST(QuadState, DegenerateMemberSets) {
  const ModelSpec ou = make_ou();
  const Resolution res{2, 4};
  using M = Member;
  auto members = [&](MultiIndex idx, CouplingMode mode = CouplingMode::MultiIndex) {
    auto init = stream(0, StreamPurpose::Initial);
    return present(init_quad(ou, idx, res, init, mode));
  };
  EXPECT_EQ(members({0, 0}), (std::set<M>{M::FineFine}));
  EXPECT_EQ(members({2, 0}), (std::set<M>{M::FineFine, M::CoarseFine}));
  EXPECT_EQ(members({0, 3}), (std::set<M>{M::FineFine, M::FineCoarse1, M::FineCoarse2}));
  EXPECT_EQ(members({1, 1}).size(), 6u);
  EXPECT_EQ(members({0, 0}, CouplingMode::MultiLevel), (std::set<M>{M::FineFine}));
  EXPECT_EQ(members({2, 2}, CouplingMode::MultiLevel),
            (std::set<M>{M::FineFine, M::CoarseCoarse1, M::CoarseCoarse2}));
  auto init = stream(0, StreamPurpose::Initial);
  EXPECT_THROW(init_quad(ou, {1, 0}, res, init, CouplingMode::MultiLevel), ArgumentError);
  EXPECT_THROW(init_quad(ou, {-1, 0}, res, init), ArgumentError);
}

TEST(QuadState, InitialHalvesPartitionTheFullEnsemble) {
  auto init = stream(1, StreamPurpose::Initial);
  const QuadCoupledState s = init_quad(make_ou(), {1, 1}, {2, 4}, init);
  ASSERT_EQ(s.particles(), 8);
  const auto& ff = s.at(Member::FineFine).ensemble.particles;
  EXPECT_EQ(s.at(Member::CoarseFine).ensemble.particles, ff);
  EXPECT_EQ(s.at(Member::FineCoarse1).ensemble.particles, ff.topRows(4));
  EXPECT_EQ(s.at(Member::FineCoarse2).ensemble.particles, ff.bottomRows(4));
  EXPECT_EQ(s.at(Member::CoarseCoarse2).ensemble.particles, ff.bottomRows(4));
  EXPECT_DOUBLE_EQ(delta_mixed(s, Qoi::identity()), 0.0);
}

TEST(QuadState, AbsentMemberAccessThrows) {
  auto init = stream(1, StreamPurpose::Initial);
  const QuadCoupledState s = init_quad(make_ou(), {0, 0}, {2, 4}, init);
  EXPECT_THROW(s.at(Member::CoarseFine), ArgumentError);
}

TEST(QuadPredict, CoarseMembersSeePairwiseSums) {
  // Over a vanishing interval the drift drops out and every member ends at
  // u0 + sigma * (sum of its increments), which pairwise sums preserve.
  ModelSpec m = make_ou();
  m.obs_interval = 1e-9;
  auto init = stream(3, StreamPurpose::Initial);
  QuadCoupledState s = init_quad(m, {1, 1}, {2, 4}, init);
  auto dyn = stream(3, StreamPurpose::Dynamics, 1);
  s = quad_predict(std::move(s), m, dyn);
  const auto& ff = s.at(Member::FineFine).ensemble.particles;
  EXPECT_TRUE(s.at(Member::CoarseFine).ensemble.particles.isApprox(ff, 1e-12));
  EXPECT_TRUE(s.at(Member::CoarseCoarse1).ensemble.particles.isApprox(ff.topRows(4), 1e-12));
  EXPECT_TRUE(s.at(Member::FineCoarse2).ensemble.particles.isApprox(ff.bottomRows(4), 1e-12));
  EXPECT_EQ(s.at(Member::FineCoarse2).ensemble.particles, ff.bottomRows(4));
}

TEST(QuadUpdate, PerturbationRowsFollowGlobalIds) {
  auto init = stream(4, StreamPurpose::Initial);
  QuadCoupledState s = init_quad(make_ou(), {1, 1}, {2, 4}, init);
  const double gains[kMemberCount] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const QuadCoupledState before = s;
  for (int k = 0; k < kMemberCount; ++k) {
    auto& member = *s.members[static_cast<std::size_t>(k)];
    member.ensemble.role = EnsembleRole::Predicted;
    member.gain = Matrix::Constant(1, 1, gains[k]);
  }
  PerturbedObs pobs;
  pobs.base_obs = Vector::Constant(1, 1.0);
  pobs.perturbations.resize(8, 1);
  for (int i = 0; i < 8; ++i) pobs.perturbations(i, 0) = 0.01 * (i + 1);
  const QuadCoupledState after = quad_update(s, make_ou(), pobs);
  for (const auto& layout : member_layout(after)) {
    const double k = gains[static_cast<int>(layout.member)];
    const auto& v0 = before.at(layout.member).ensemble.particles;
    const auto& v1 = after.at(layout.member).ensemble.particles;
    ASSERT_EQ(v1.rows(), layout.count);
    for (int j = 0; j < layout.count; ++j) {
      const double y = 1.0 + 0.01 * (layout.offset + j + 1);
      EXPECT_NEAR(v1(j, 0), v0(j, 0) + k * (y - v0(j, 0)), 1e-15) << to_string(layout.member) << " " << j;
    }
  }
  EXPECT_THROW(quad_update(s, make_ou(), [&] {
                 PerturbedObs p = pobs;
                 p.perturbations.conservativeResize(7, 1);
                 return p;
               }()),
               ArgumentError);
}

TEST(DeltaMixed, LevelZeroIsTheEnsembleMean) {
  const QuadCoupledState s = sampled_state(make_ou(), {0, 0}, {4, 10}, 5);
  EXPECT_DOUBLE_EQ(delta_mixed(s, Qoi::identity()), mean_of(s, Member::FineFine));
}

TEST(DeltaMixed, TimeOnlyIndex) {
  const QuadCoupledState s = sampled_state(make_double_well(), {2, 0}, {4, 10}, 6);
  EXPECT_DOUBLE_EQ(delta_mixed(s, Qoi::identity()), mean_of(s, Member::FineFine) - mean_of(s, Member::CoarseFine));
}

TEST(DeltaMixed, OrderOfDifferencesCommutes) {
  for (std::uint64_t sample = 0; sample < 5; ++sample) {
    const QuadCoupledState s = sampled_state(make_double_well(), {2, 2}, {4, 10}, sample);
    const double time_first =
        (mean_of(s, Member::FineFine) - mean_of(s, Member::CoarseFine)) -
        0.5 * ((mean_of(s, Member::FineCoarse1) - mean_of(s, Member::CoarseCoarse1)) +
               (mean_of(s, Member::FineCoarse2) - mean_of(s, Member::CoarseCoarse2)));
    const double size_first =
        (mean_of(s, Member::FineFine) - 0.5 * (mean_of(s, Member::FineCoarse1) + mean_of(s, Member::FineCoarse2))) -
        (mean_of(s, Member::CoarseFine) -
         0.5 * (mean_of(s, Member::CoarseCoarse1) + mean_of(s, Member::CoarseCoarse2)));
    const double d = delta_mixed(s, Qoi::identity());
    EXPECT_NEAR(d, time_first, 1e-14);
    EXPECT_NEAR(d, size_first, 1e-14);
  }
}

TEST(DeltaMixed, EqualizedResolutionCancelsExactly) {
  for (MultiIndex idx : {MultiIndex{1, 0}, MultiIndex{1, 1}, MultiIndex{2, 3}}) {
    const QuadCoupledState s = sampled_state(make_double_well(), idx, {4, 10}, 7, 3, true);
    EXPECT_EQ(delta_mixed(s, Qoi::identity()), 0.0) << idx.l1 << "," << idx.l2;
  }
}

TEST(DeltaMixed, LinearInQoi) {
  const QuadCoupledState s = sampled_state(make_ou(), {1, 2}, {4, 10}, 8);
  const Qoi affine{"a", [](std::span<const double> u) { return 3.0 * u[0] - 2.0; }};
  // Constants cancel in every difference of order >= 1.
  EXPECT_NEAR(delta_mixed(s, affine), 3.0 * delta_mixed(s, Qoi::identity()), 1e-14);
}

TEST(PairCoupling, LevelZeroIsOneEnKFStep) {
  const ModelSpec ou = make_ou();
  const Resolution res{4, 10};
  const Vector y = Vector::Constant(1, 0.7);
  auto init = stream(9, StreamPurpose::Initial);
  auto dyn = stream(9, StreamPurpose::Dynamics, 1);
  auto per = stream(9, StreamPurpose::Perturbation, 1);
  PairCoupledState pair = init_pair(ou, 0, res, init);
  EXPECT_FALSE(pair.has_coarse());
  pair = pair_step(std::move(pair), ou, y, dyn, per);

  auto init2 = stream(9, StreamPurpose::Initial);
  auto dyn2 = stream(9, StreamPurpose::Dynamics, 1);
  auto per2 = stream(9, StreamPurpose::Perturbation, 1);
  EnsembleState ens = draw_initial_ensemble(ou, 10, init2);
  std::vector<NoisePath> noise;
  for (int i = 0; i < 10; ++i) noise.push_back(sample_noise(dyn2, 4, 1, 1.0));
  ens = predict_ensemble(ens, ou, noise);
  const Matrix k = kalman_gain(sample_cov(ens, CovDivisor::Biased), ou.obs_operator, ou.obs_noise_cov);
  ens = update_ensemble(ens, k, ou.obs_operator, draw_perturbed_obs(y, cholesky_factor(ou.obs_noise_cov), 10, per2));
  EXPECT_EQ(pair.fine().particles, ens.particles);
  EXPECT_EQ(pair_difference(pair, Qoi::identity()), estimate_qoi(ens, Qoi::identity()));
}

TEST(PairCoupling, UnobservedEqualizedPairCancels) {
  ModelSpec dw = make_double_well();
  dw.obs_operator = Matrix::Zero(1, 1);
  auto init = stream(10, StreamPurpose::Initial);
  PairCoupledState pair = init_pair(dw, 2, {4, 10}, init);
  pair.core.equalize_resolution = true;
  for (int n = 1; n <= 3; ++n) {
    auto dyn = stream(10, StreamPurpose::Dynamics, static_cast<std::uint64_t>(n));
    auto per = stream(10, StreamPurpose::Perturbation, static_cast<std::uint64_t>(n));
    pair = pair_step(std::move(pair), dw, Vector::Constant(1, 0.0), dyn, per);
  }
  EXPECT_NEAR(pair_difference(pair, Qoi::identity()), 0.0, 1e-14);
}

TEST(PairCoupling, DoubleWellDifferenceShrinksWithLevel) {
  // Second moment of the pair difference over independent samples, one
  // observation time; expected to decay at least like 2^-l.
  const ModelSpec dw = make_double_well();
  const Resolution res{4, 10};
  std::vector<double> lv, lm;
  for (int level = 1; level <= 4; ++level) {
    const int samples = 4000 >> (level - 1);
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
      const QuadCoupledState s = sampled_state(dw, {level, level}, res, static_cast<std::uint64_t>(i + 100000 * level),
                                               1, false, CouplingMode::MultiLevel);
      const double d = delta_mixed(s, Qoi::identity());
      acc += d * d;
    }
    lv.push_back(level);
    lm.push_back(std::log2(acc / samples));
  }
  EXPECT_LT(ls_slope(lv, lm), -0.7);
}

TEST(QuadCoupling, StrongTimeDifferenceRate) {
  // ff - cf at fixed ensemble size: second moment decays like 2^-2 l1 for
  // additive noise.
  const ModelSpec ou = make_ou();
  std::vector<double> lv, lm;
  for (int l1 = 1; l1 <= 4; ++l1) {
    double acc = 0.0;
    const int samples = 2000;
    for (int i = 0; i < samples; ++i) {
      const QuadCoupledState s = sampled_state(ou, {l1, 0}, {4, 10}, static_cast<std::uint64_t>(i + 100000 * l1), 1);
      const double d = delta_mixed(s, Qoi::identity());
      acc += d * d;
    }
    lv.push_back(l1);
    lm.push_back(std::log2(acc / samples));
  }
  EXPECT_NEAR(ls_slope(lv, lm), -2.0, 0.4);
}
