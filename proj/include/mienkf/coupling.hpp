#pragma once

#include "mienkf/enkf.hpp"

#include <array>
#include <compare>
#include <optional>
#include <string_view>
#include <vector>

namespace mienkf {

/// (l1, l2): l1 selects N_{l1} = N0 2^l1 timesteps, l2 selects P_{l2} = P0 2^l2 particles.
struct MultiIndex {
  int l1 = 0;
  int l2 = 0;

  int order() const { return l1 + l2; }
  auto operator<=>(const MultiIndex&) const = default;
};

struct Resolution {
  int n0 = 4;
  int p0 = 20;

  int steps(int l1) const { return n0 << l1; }
  int particles(int l2) const { return p0 << l2; }
};

/// MultiIndex couples four estimators (l, l-e1, l-e2, l-1); MultiLevel couples the
/// diagonal pair (l, l) and (l-1, l-1) of the MLEnKF hierarchy.
enum class CouplingMode { MultiIndex, MultiLevel };

/// Sub-ensembles of one coupled sample, named <time resolution><ensemble size>:
/// FineFine is index l, CoarseFine is l-e1, FineCoarse1/2 are the two halves of
/// l-e2 and CoarseCoarse1/2 the two halves of l-1.
enum class Member : int { FineFine = 0, CoarseFine, FineCoarse1, FineCoarse2, CoarseCoarse1, CoarseCoarse2 };
inline constexpr int kMemberCount = 6;
std::string_view to_string(Member member);

struct CoupledMember {
  EnsembleState ensemble;
  Matrix gain;  // set by the prediction step, consumed by the update
};

struct QuadCoupledState {
  MultiIndex index;
  Resolution resolution;
  CouplingMode mode = CouplingMode::MultiIndex;
  int time_index = 0;
  /// Test hook: coarse-time members take the fine step count and the fine
  /// increments, so coupled members become exact copies of each other.
  bool equalize_resolution = false;
  std::array<std::optional<CoupledMember>, kMemberCount> members;

  bool has(Member m) const { return members[static_cast<std::size_t>(m)].has_value(); }
  CoupledMember& at(Member m);
  const CoupledMember& at(Member m) const;

  /// Number of global particle ids (size of the FineFine ensemble).
  int particles() const;
  int fine_steps() const;
  int coarse_steps() const;
};

/// Which global particle ids a member carries and which noise it sees.
struct MemberLayout {
  Member member;
  bool coarse_time = false;
  int offset = 0;
  int count = 0;
};

std::vector<MemberLayout> member_layout(const QuadCoupledState& state);

/// Draws P_{l2} particles from the initial law and copies them into every
/// present member (halves take ids [0, P/2) and [P/2, P)).
QuadCoupledState init_quad(const ModelSpec& model, MultiIndex index, Resolution resolution, RandomStream& init,
                           CouplingMode mode = CouplingMode::MultiIndex);
QuadCoupledState init_quad(const EnsembleState& initial, MultiIndex index, Resolution resolution,
                           CouplingMode mode = CouplingMode::MultiIndex);

/// One fine Brownian path per global particle id drives the fine-time members;
/// its pairwise sums drive the coarse-time members. Afterwards every member holds
/// its own sample covariance based gain.
QuadCoupledState quad_predict(QuadCoupledState state, const ModelSpec& model, RandomStream& dynamics,
                              CovDivisor divisor = CovDivisor::Biased);

/// Member particle j uses perturbed observation row offset + j, with the member's own gain.
QuadCoupledState quad_update(QuadCoupledState state, const ModelSpec& model, const PerturbedObs& pobs);

/// Mixed difference Delta mu^l[phi]; absent members contribute zero.
double delta_mixed(const QuadCoupledState& state, const Qoi& qoi);

/// Pairwise-coupled MLEnKF sample: thin view over the diagonal coupled state.
struct PairCoupledState {
  QuadCoupledState core;

  int level() const { return core.index.l1; }
  EnsembleState& fine() { return core.at(Member::FineFine).ensemble; }
  const EnsembleState& fine() const { return core.at(Member::FineFine).ensemble; }
  bool has_coarse() const { return core.has(Member::CoarseCoarse1); }
  const EnsembleState& coarse1() const { return core.at(Member::CoarseCoarse1).ensemble; }
  const EnsembleState& coarse2() const { return core.at(Member::CoarseCoarse2).ensemble; }
};

PairCoupledState init_pair(const ModelSpec& model, int level, Resolution resolution, RandomStream& init);

/// Prediction followed by an update against y with freshly drawn perturbations.
PairCoupledState pair_step(PairCoupledState state, const ModelSpec& model, const Vector& y,
                           RandomStream& dynamics, RandomStream& perturbation,
                           CovDivisor divisor = CovDivisor::Biased);

/// mu^{l}[phi] - (mu^{l-1,1} + mu^{l-1,2})[phi] / 2, or mu^0[phi] at level 0.
double pair_difference(const PairCoupledState& state, const Qoi& qoi);

}  // namespace mienkf
