#pragma once

#include "mienkf/coupling.hpp"
#include "mienkf/observations.hpp"
#include "mienkf/schedule.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mienkf {

struct RunOptions {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  /// 0 means MIENKF_THREADS or the hardware concurrency.
  int threads = 1;
};

/// Output of one estimator run. estimates[q][n] is the filter estimate of QoI q
/// at observation time n; n = 0 is the prior mean estimate.
struct RunRecord {
  Method method = Method::MIEnKF;
  std::string model;
  std::vector<std::string> qoi_names;
  std::vector<std::vector<double>> estimates;
  std::uint64_t work_units = 0;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  int horizon = 0;
  ScheduleParams schedule;

  const std::vector<double>& series(std::size_t q = 0) const { return estimates.at(q); }
};

/// Identity of one coupled sample inside an experiment.
struct SampleKey {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
  MultiIndex index;
  std::uint64_t sample = 0;
  std::uint32_t family = 0;
};

/// Stream family tags; EnKF shares the multi-index family so that a one-index
/// MIEnKF run at (0, 0) reproduces a plain EnKF run draw for draw.
inline constexpr std::uint32_t kFamilyEnsemble = 0;
inline constexpr std::uint32_t kFamilyMultilevel = 1;

/// Streams of one coupled sample: the initial draw, and per observation time n
/// the dynamics noise and the observation perturbations.
RandomStream initial_stream(const SampleKey& key);
RandomStream dynamics_stream(const SampleKey& key, int time);
RandomStream perturbation_stream(const SampleKey& key, int time);

/// Options for single coupled-sample trajectories.
struct SampleOptions {
  CovDivisor divisor = CovDivisor::Biased;
  bool equalize_resolution = false;
  /// If set, called after every update with the coupled state (diagnostic dumps).
  std::function<void(const QuadCoupledState&)> observer;
};

/// Advances one coupled sample through all observation times and returns
/// delta[q][n] (the mixed difference of QoI q at time n, n = 0..horizon).
std::vector<std::vector<double>> coupled_sample(const ModelSpec& model, const ObservationSequence& data,
                                                std::span<const Qoi> qois, Resolution resolution,
                                                CouplingMode mode, const SampleKey& key,
                                                const SampleOptions& options = {});

/// Plain EnKF trajectory with P particles and N steps per interval; returns mu[q][n].
std::vector<std::vector<double>> enkf_trajectory(const ModelSpec& model, const ObservationSequence& data,
                                                 std::span<const Qoi> qois, int steps, int particles,
                                                 CovDivisor divisor, const SampleKey& key);

RunRecord run_enkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                   std::span<const Qoi> qois, const RunOptions& options = {});
RunRecord run_mlenkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options = {});
RunRecord run_mienkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options = {});
/// Dispatches on schedule.method.
RunRecord run_filter(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options = {});

/// Truth resolution for data shared by the given schedules: 4x their finest
/// timestep count.
int truth_steps_for(std::span<const ScheduleParams> schedules);

/// Default QoIs: every state component (x0, x1, ...).
std::vector<Qoi> default_qois(const ModelSpec& model);

}  // namespace mienkf
