#include "mienkf/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mienkf {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
}

/// ceil(log2(1/eps)), exact for powers of two.
int log2_inverse(double epsilon) { return static_cast<int>(ceil_guarded(std::log2(1.0 / epsilon))); }

}  // namespace

long ceil_guarded(double x) {
  const double r = std::round(x);
  if (r != 0.0 && std::abs(x - r) <= 1e-10 * std::abs(x)) return static_cast<long>(r);
  return static_cast<long>(std::ceil(x));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::EnKF: return "enkf";
    case Method::MLEnKF: return "mlenkf";
    case Method::MIEnKF: return "mienkf";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "enkf") return Method::EnKF;
  if (name == "mlenkf") return Method::MLEnKF;
  if (name == "mienkf") return Method::MIEnKF;
  throw ArgumentError("unknown method '" + std::string(name) + "' (expected enkf, mlenkf or mienkf)");
}

std::string_view to_string(ModelProfile profile) {
  switch (profile) {
    case ModelProfile::Scalar: return "scalar";
    case ModelProfile::Langevin: return "langevin";
    case ModelProfile::Reference: return "reference";
  }
  return "?";
}

ModelProfile parse_profile(std::string_view name) {
  if (name == "scalar") return ModelProfile::Scalar;
  if (name == "langevin") return ModelProfile::Langevin;
  if (name == "reference") return ModelProfile::Reference;
  throw ArgumentError("unknown schedule profile '" + std::string(name) + "'");
}

ModelProfile default_profile(ModelKind kind) {
  return kind == ModelKind::Langevin ? ModelProfile::Langevin : ModelProfile::Scalar;
}

ScheduleConstants preset_constants(ModelProfile profile) {
  ScheduleConstants c;
  switch (profile) {
    case ModelProfile::Scalar:
      break;
    case ModelProfile::Langevin:
      c.enkf_particle_factor = 10.0;
      c.mlenkf_p0 = 8;
      c.mlenkf_shift = 2;
      c.mienkf_p0 = 20;
      c.mienkf_level_multiplier = 50;
      break;
    case ModelProfile::Reference:
      c.mienkf_level_multiplier = 90;
      break;
  }
  return c;
}

std::vector<MultiIndex> index_set(int max_level) {
  if (max_level < 0) throw ArgumentError("max level must be non-negative");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>((max_level + 1) * (max_level + 2) / 2));
  for (int l1 = 0; l1 <= max_level; ++l1) {
    for (int l2 = 0; l1 + l2 <= max_level; ++l2) out.push_back({l1, l2});
  }
  return out;
}

int mienkf_max_level(double epsilon) {
  check_epsilon(epsilon);
  const int base = log2_inverse(epsilon) - 1;
  if (base < 1) return 1;
  return std::max(static_cast<int>(ceil_guarded(base + std::log2(static_cast<double>(base)))) - 1, 1);
}

int mlenkf_max_level(double epsilon) {
  check_epsilon(epsilon);
  return std::max(log2_inverse(epsilon) - 1, 0);
}

std::vector<MultiIndex> ScheduleParams::index_set() const {
  std::vector<MultiIndex> out;
  out.reserve(levels.size());
  for (const auto& l : levels) out.push_back(l.index);
  return out;
}

long ScheduleParams::samples(MultiIndex index) const {
  for (const auto& l : levels) {
    if (l.index == index) return l.samples;
  }
  throw ArgumentError("index not in the schedule");
}

int ScheduleParams::finest_steps() const {
  int finest = 0;
  for (const auto& l : levels) finest = std::max(finest, resolution.steps(l.index.l1));
  return finest;
}

std::uint64_t ScheduleParams::work_units(int horizon) const {
  std::uint64_t per_step = 0;
  for (const auto& l : levels) {
    per_step += static_cast<std::uint64_t>(l.samples) * static_cast<std::uint64_t>(resolution.steps(l.index.l1)) *
                static_cast<std::uint64_t>(resolution.particles(l.index.l2));
  }
  return per_step * static_cast<std::uint64_t>(std::max(horizon, 0));
}

ScheduleParams build_schedule(Method method, double epsilon, ModelProfile profile) {
  return build_schedule(method, epsilon, preset_constants(profile), profile);
}

ScheduleParams build_schedule(Method method, double epsilon, const ScheduleConstants& c, ModelProfile profile) {
  check_epsilon(epsilon);
  ScheduleParams s;
  s.method = method;
  s.profile = profile;
  s.epsilon = epsilon;
  s.constants = c;
  const double inv2 = 1.0 / (epsilon * epsilon);

  switch (method) {
    case Method::EnKF: {
      const long particles = std::max<long>(ceil_guarded(c.enkf_particle_factor * inv2), 2);
      const long steps = std::max<long>(ceil_guarded(1.0 / epsilon), 1);
      s.resolution = Resolution{static_cast<int>(steps), static_cast<int>(particles)};
      s.max_level = 0;
      s.levels = {{{0, 0}, 1}};
      s.divisor = c.enkf_divisor;
      break;
    }
    case Method::MLEnKF: {
      const int L = mlenkf_max_level(epsilon);
      s.resolution = Resolution{c.mlenkf_n0, c.mlenkf_p0};
      s.max_level = L;
      s.divisor = c.coupled_divisor;
      const double lsq = static_cast<double>(L) * L;
      for (int l = 0; l <= L; ++l) {
        long m = ceil_guarded(inv2 * lsq * std::ldexp(1.0, -2 * l - c.mlenkf_shift));
        if (l == 0) m *= 2;
        s.levels.push_back({{l, l}, std::max<long>(m, 1)});
      }
      break;
    }
    case Method::MIEnKF: {
      const int L = mienkf_max_level(epsilon);
      s.resolution = Resolution{c.mienkf_n0, c.mienkf_p0};
      s.max_level = L;
      s.divisor = c.coupled_divisor;
      for (const MultiIndex idx : mienkf::index_set(L)) {
        const double np = static_cast<double>(s.resolution.steps(idx.l1)) * s.resolution.particles(idx.l2);
        const long base = ceil_guarded(inv2 * std::pow(np, -1.5));
        const long mult = (idx.l1 == 0 && idx.l2 == 0) ? c.mienkf_base_multiplier : c.mienkf_level_multiplier;
        s.levels.push_back({idx, std::max<long>(mult * base, 1)});
      }
      break;
    }
  }
  return s;
}

ScheduleParams custom_schedule(Method method, Resolution resolution, std::vector<LevelPlan> levels,
                               CovDivisor divisor) {
  if (levels.empty()) throw ArgumentError("schedule needs at least one index");
  for (const auto& l : levels) {
    if (l.samples < 1) throw ArgumentError("every index needs at least one sample");
    if (l.index.l1 < 0 || l.index.l2 < 0) throw ArgumentError("multi-index entries must be non-negative");
    if (method == Method::MLEnKF && l.index.l1 != l.index.l2)
      throw ArgumentError("multilevel schedules live on the diagonal");
  }
  ScheduleParams s;
  s.method = method;
  s.resolution = resolution;
  s.levels = std::move(levels);
  s.divisor = divisor;
  for (const auto& l : s.levels) s.max_level = std::max(s.max_level, l.index.order());
  return s;
}

}  // namespace mienkf
