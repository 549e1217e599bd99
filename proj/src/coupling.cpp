#include "mienkf/coupling.hpp"

#include "mienkf/observations.hpp"

#include <cmath>

namespace mienkf {

namespace {

std::size_t slot(Member m) { return static_cast<std::size_t>(m); }

bool coarse_time_member(Member m) {
  return m == Member::CoarseFine || m == Member::CoarseCoarse1 || m == Member::CoarseCoarse2;
}

/// Which members exist for an index, following the degenerate-index rules.
std::array<bool, kMemberCount> present_members(MultiIndex index, CouplingMode mode) {
  std::array<bool, kMemberCount> on{};
  on[slot(Member::FineFine)] = true;
  if (mode == CouplingMode::MultiLevel) {
    const bool coarse = index.l1 > 0;
    on[slot(Member::CoarseCoarse1)] = coarse;
    on[slot(Member::CoarseCoarse2)] = coarse;
    return on;
  }
  const bool time = index.l1 > 0;
  const bool size = index.l2 > 0;
  on[slot(Member::CoarseFine)] = time;
  on[slot(Member::FineCoarse1)] = size;
  on[slot(Member::FineCoarse2)] = size;
  on[slot(Member::CoarseCoarse1)] = time && size;
  on[slot(Member::CoarseCoarse2)] = time && size;
  return on;
}

void check_index(MultiIndex index, Resolution resolution, CouplingMode mode) {
  if (index.l1 < 0 || index.l2 < 0) throw ArgumentError("multi-index entries must be non-negative");
  if (mode == CouplingMode::MultiLevel && index.l1 != index.l2)
    throw ArgumentError("multilevel coupling lives on the diagonal l1 == l2");
  if (resolution.n0 < 1 || resolution.p0 < 2) throw ArgumentError("need N0 >= 1 and P0 >= 2");
}

double member_mean(const QuadCoupledState& state, Member m, const Qoi& qoi) {
  return estimate_qoi(state.at(m).ensemble, qoi);
}

}  // namespace

std::string_view to_string(Member member) {
  switch (member) {
    case Member::FineFine: return "ff";
    case Member::CoarseFine: return "cf";
    case Member::FineCoarse1: return "fc1";
    case Member::FineCoarse2: return "fc2";
    case Member::CoarseCoarse1: return "cc1";
    case Member::CoarseCoarse2: return "cc2";
  }
  return "?";
}

CoupledMember& QuadCoupledState::at(Member m) {
  auto& slot_ref = members[slot(m)];
  if (!slot_ref) throw ArgumentError("sub-ensemble " + std::string(to_string(m)) + " is absent at this index");
  return *slot_ref;
}

const CoupledMember& QuadCoupledState::at(Member m) const {
  const auto& slot_ref = members[slot(m)];
  if (!slot_ref) throw ArgumentError("sub-ensemble " + std::string(to_string(m)) + " is absent at this index");
  return *slot_ref;
}

int QuadCoupledState::particles() const { return resolution.particles(index.l2); }

int QuadCoupledState::fine_steps() const { return resolution.steps(index.l1); }

int QuadCoupledState::coarse_steps() const {
  if (index.l1 == 0) return 0;
  return equalize_resolution ? fine_steps() : fine_steps() / 2;
}

std::vector<MemberLayout> member_layout(const QuadCoupledState& state) {
  const int p = state.particles();
  const int half = p / 2;
  std::vector<MemberLayout> out;
  out.reserve(kMemberCount);
  for (int k = 0; k < kMemberCount; ++k) {
    const auto m = static_cast<Member>(k);
    if (!state.has(m)) continue;
    MemberLayout layout{m, coarse_time_member(m), 0, p};
    if (m == Member::FineCoarse1 || m == Member::CoarseCoarse1) layout.count = half;
    if (m == Member::FineCoarse2 || m == Member::CoarseCoarse2) {
      layout.offset = half;
      layout.count = half;
    }
    out.push_back(layout);
  }
  return out;
}

QuadCoupledState init_quad(const EnsembleState& initial, MultiIndex index, Resolution resolution,
                           CouplingMode mode) {
  check_index(index, resolution, mode);
  QuadCoupledState state;
  state.index = index;
  state.resolution = resolution;
  state.mode = mode;
  const int p = state.particles();
  if (initial.size() != p) throw ArgumentError("initial ensemble must hold P_{l2} particles");
  if (initial.role != EnsembleRole::Updated) throw ArgumentError("initial ensemble must be an updated ensemble");

  const auto on = present_members(index, mode);
  for (int k = 0; k < kMemberCount; ++k) {
    if (on[static_cast<std::size_t>(k)]) state.members[static_cast<std::size_t>(k)] = CoupledMember{};
  }
  for (const auto& layout : member_layout(state)) {
    EnsembleState& ens = state.at(layout.member).ensemble;
    ens.particles = initial.particles.middleRows(layout.offset, layout.count);
    ens.time_index = initial.time_index;
    ens.role = EnsembleRole::Updated;
  }
  state.time_index = initial.time_index;
  return state;
}

QuadCoupledState init_quad(const ModelSpec& model, MultiIndex index, Resolution resolution, RandomStream& init,
                           CouplingMode mode) {
  check_index(index, resolution, mode);
  const EnsembleState initial = draw_initial_ensemble(model, resolution.particles(index.l2), init);
  return init_quad(initial, index, resolution, mode);
}

QuadCoupledState quad_predict(QuadCoupledState state, const ModelSpec& model, RandomStream& dynamics,
                              CovDivisor divisor) {
  const auto layout = member_layout(state);
  for (const auto& l : layout) {
    if (state.at(l.member).ensemble.role != EnsembleRole::Updated)
      throw ArgumentError("quad_predict expects updated sub-ensembles");
  }

  const int channels = model.noise_channels();
  const int fine_steps = state.fine_steps();
  const int coarse_steps = state.coarse_steps();
  const double fine_dt = model.obs_interval / fine_steps;
  const double coarse_dt = coarse_steps > 0 ? model.obs_interval / coarse_steps : 0.0;
  const double scale = std::sqrt(fine_dt);

  std::vector<double> fine(static_cast<std::size_t>(fine_steps * channels));
  std::vector<double> coarse(static_cast<std::size_t>(coarse_steps * channels));

  // Per-member raw pointers to rows, so the inner loop avoids optional lookups.
  struct Target {
    EnsembleState* ens;
    MemberLayout layout;
  };
  std::vector<Target> targets;
  targets.reserve(layout.size());
  for (const auto& l : layout) targets.push_back({&state.at(l.member).ensemble, l});

  const int p = state.particles();
  for (int i = 0; i < p; ++i) {
    dynamics.fill_normal(fine, scale);
    if (coarse_steps > 0) {
      if (state.equalize_resolution) {
        coarse = fine;
      } else {
        for (int k = 0; k < coarse_steps; ++k) {
          for (int c = 0; c < channels; ++c) {
            coarse[static_cast<std::size_t>(k * channels + c)] =
                fine[static_cast<std::size_t>(2 * k * channels + c)] +
                fine[static_cast<std::size_t>((2 * k + 1) * channels + c)];
          }
        }
      }
    }
    for (auto& t : targets) {
      const int local = i - t.layout.offset;
      if (local < 0 || local >= t.layout.count) continue;
      try {
        if (t.layout.coarse_time)
          propagate_in_place(model, t.ens->particle(local), coarse, coarse_steps, coarse_dt);
        else
          propagate_in_place(model, t.ens->particle(local), fine, fine_steps, fine_dt);
      } catch (const DivergenceError& e) {
        DivergenceSite site = e.site();
        site.particle = i;
        site.member = std::string(to_string(t.layout.member));
        site.level1 = state.index.l1;
        site.level2 = state.index.l2;
        site.time = state.time_index + 1;
        throw DivergenceError(site);
      }
    }
  }

  for (const auto& l : layout) {
    CoupledMember& member = state.at(l.member);
    member.ensemble.role = EnsembleRole::Predicted;
    member.ensemble.time_index += 1;
    member.gain = kalman_gain(sample_cov(member.ensemble, divisor), model.obs_operator, model.obs_noise_cov);
  }
  state.time_index += 1;
  return state;
}

QuadCoupledState quad_update(QuadCoupledState state, const ModelSpec& model, const PerturbedObs& pobs) {
  if (pobs.size() != state.particles())
    throw ArgumentError("quad_update needs one perturbed observation per global particle id");
  if (pobs.base_obs.size() != model.obs_dim()) throw ArgumentError("observation dimension mismatch");
  for (const auto& l : member_layout(state)) {
    CoupledMember& member = state.at(l.member);
    if (member.ensemble.role != EnsembleRole::Predicted)
      throw ArgumentError("quad_update expects predicted sub-ensembles");
    detail::apply_update(member.ensemble.particles, member.gain, model.obs_operator, pobs, l.offset);
    member.ensemble.role = EnsembleRole::Updated;
  }
  return state;
}

double delta_mixed(const QuadCoupledState& state, const Qoi& qoi) {
  if (state.mode == CouplingMode::MultiLevel) {
    const double fine = member_mean(state, Member::FineFine, qoi);
    if (!state.has(Member::CoarseCoarse1)) return fine;
    return fine - 0.5 * (member_mean(state, Member::CoarseCoarse1, qoi) +
                         member_mean(state, Member::CoarseCoarse2, qoi));
  }
  // Delta_2 applied to Delta_1; written so exactly coupled copies cancel to 0.
  auto time_difference = [&](Member fine_member, Member coarse_member) {
    const double fine = member_mean(state, fine_member, qoi);
    return state.has(coarse_member) ? fine - member_mean(state, coarse_member, qoi) : fine;
  };
  const double full = time_difference(Member::FineFine, Member::CoarseFine);
  if (!state.has(Member::FineCoarse1)) return full;
  const double halves = 0.5 * (time_difference(Member::FineCoarse1, Member::CoarseCoarse1) +
                               time_difference(Member::FineCoarse2, Member::CoarseCoarse2));
  return full - halves;
}

PairCoupledState init_pair(const ModelSpec& model, int level, Resolution resolution, RandomStream& init) {
  return PairCoupledState{init_quad(model, {level, level}, resolution, init, CouplingMode::MultiLevel)};
}

PairCoupledState pair_step(PairCoupledState state, const ModelSpec& model, const Vector& y,
                           RandomStream& dynamics, RandomStream& perturbation, CovDivisor divisor) {
  state.core = quad_predict(std::move(state.core), model, dynamics, divisor);
  const PerturbedObs pobs =
      draw_perturbed_obs(y, cholesky_factor(model.obs_noise_cov), state.core.particles(), perturbation);
  state.core = quad_update(std::move(state.core), model, pobs);
  return state;
}

double pair_difference(const PairCoupledState& state, const Qoi& qoi) { return delta_mixed(state.core, qoi); }

}  // namespace mienkf
