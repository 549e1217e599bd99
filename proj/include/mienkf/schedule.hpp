#pragma once

#include "mienkf/coupling.hpp"
#include "mienkf/enkf.hpp"
#include "mienkf/sde_models.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace mienkf {

enum class Method { EnKF, MLEnKF, MIEnKF };
std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Named constant sets for the schedules: the scalar SDEs (OU, double well),
/// the Langevin problem, and the high-accuracy pseudoreference runs.
enum class ModelProfile { Scalar, Langevin, Reference };
std::string_view to_string(ModelProfile profile);
ModelProfile parse_profile(std::string_view name);
ModelProfile default_profile(ModelKind kind);

struct ScheduleConstants {
  // EnKF: P = ceil(c eps^-2), N = ceil(eps^-1).
  double enkf_particle_factor = 15.0;
  // MLEnKF: N_l = n0 2^l, P_l = p0 2^l,
  // M_l = ceil(eps^-2 L^2 2^{-2l-shift}), doubled at l = 0.
  int mlenkf_n0 = 2;
  int mlenkf_p0 = 10;
  int mlenkf_shift = 3;
  // MIEnKF: N = n0 2^l1, P = p0 2^l2,
  // M_l = c * ceil(eps^-2 N^-3/2 P^-3/2), c = base at (0,0) and level elsewhere.
  int mienkf_n0 = 4;
  int mienkf_p0 = 30;
  long mienkf_base_multiplier = 6;
  long mienkf_level_multiplier = 120;
  CovDivisor enkf_divisor = CovDivisor::Unbiased;
  CovDivisor coupled_divisor = CovDivisor::Biased;
};

ScheduleConstants preset_constants(ModelProfile profile);

struct LevelPlan {
  MultiIndex index;
  long samples = 1;
};

struct ScheduleParams {
  Method method = Method::MIEnKF;
  ModelProfile profile = ModelProfile::Scalar;
  double epsilon = 0.0;
  Resolution resolution;
  int max_level = 0;
  std::vector<LevelPlan> levels;
  CovDivisor divisor = CovDivisor::Biased;
  ScheduleConstants constants;

  std::vector<MultiIndex> index_set() const;
  long samples(MultiIndex index) const;
  /// Finest timestep count used anywhere in the schedule.
  int finest_steps() const;
  /// Sum over levels of M_l N_{l1} P_{l2}, times the number of observation times.
  std::uint64_t work_units(int horizon) const;
};

/// Lower-triangular index set {l : l1 + l2 <= L} in lexicographic order.
std::vector<MultiIndex> index_set(int max_level);

/// L = max(ceil(L* + log2 L*) - 1, 1) with L* = ceil(log2 eps^-1) - 1.
int mienkf_max_level(double epsilon);
/// L = ceil(log2 eps^-1) - 1, clamped at 0.
int mlenkf_max_level(double epsilon);

ScheduleParams build_schedule(Method method, double epsilon, ModelProfile profile);
ScheduleParams build_schedule(Method method, double epsilon, const ScheduleConstants& constants,
                              ModelProfile profile = ModelProfile::Scalar);

/// Schedule with an explicit index set and sample counts (tests, rate studies).
ScheduleParams custom_schedule(Method method, Resolution resolution, std::vector<LevelPlan> levels,
                               CovDivisor divisor);

/// ceil(x) that ignores floating-point noise just above an integer.
long ceil_guarded(double x);

}  // namespace mienkf
