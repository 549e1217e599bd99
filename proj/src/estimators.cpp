#include "mienkf/estimators.hpp"

#include "mienkf/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <numeric>
#include <string>

namespace mienkf {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MIENKF_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigurationError(std::string("MIENKF_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

namespace {

StreamKey base_key(const SampleKey& key, StreamPurpose purpose, int time) {
  StreamKey k;
  k.seed = key.seed;
  k.purpose = purpose;
  k.family = key.family;
  k.run = key.run;
  k.level1 = static_cast<std::uint32_t>(key.index.l1);
  k.level2 = static_cast<std::uint32_t>(key.index.l2);
  k.sample = key.sample;
  k.time = static_cast<std::uint64_t>(time);
  return k;
}

void check_inputs(const ModelSpec& model, const ObservationSequence& data, std::span<const Qoi> qois) {
  if (qois.empty()) throw ArgumentError("at least one quantity of interest is required");
  if (data.horizon < 0 || data.obs.size() != static_cast<std::size_t>(data.horizon) + 1)
    throw ArgumentError("observation sequence must hold horizon + 1 entries");
  for (int n = 1; n <= data.horizon; ++n) {
    if (data.obs[static_cast<std::size_t>(n)].size() != model.obs_dim())
      throw ArgumentError("observation " + std::to_string(n) + " has the wrong dimension");
  }
}

std::vector<std::vector<double>> empty_series(std::size_t qois, int horizon) {
  return std::vector<std::vector<double>>(qois, std::vector<double>(static_cast<std::size_t>(horizon) + 1, 0.0));
}

struct Task {
  std::size_t level;
  std::uint64_t sample;
};

RunRecord run_coupled(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                      std::span<const Qoi> qois, const RunOptions& options, CouplingMode mode,
                      std::uint32_t family) {
  check_inputs(model, data, qois);
  const auto start = std::chrono::steady_clock::now();

  // Most expensive indices first so the tail of the work queue is cheap.
  std::vector<std::size_t> order(schedule.levels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto cost = [&](std::size_t i) {
      const MultiIndex idx = schedule.levels[i].index;
      return static_cast<double>(schedule.resolution.steps(idx.l1)) * schedule.resolution.particles(idx.l2);
    };
    return cost(a) > cost(b);
  });
  std::vector<Task> tasks;
  std::vector<std::size_t> first_task(schedule.levels.size());
  for (std::size_t i : order) {
    first_task[i] = tasks.size();
    for (long m = 0; m < schedule.levels[i].samples; ++m) tasks.push_back({i, static_cast<std::uint64_t>(m)});
  }

  std::vector<std::vector<std::vector<double>>> results(tasks.size());
  SampleOptions sample_options;
  sample_options.divisor = schedule.divisor;
  parallel_for(tasks.size(), resolve_threads(options.threads), [&](std::size_t t) {
    const Task& task = tasks[t];
    const SampleKey key{options.seed, options.run, schedule.levels[task.level].index, task.sample, family};
    results[t] = coupled_sample(model, data, qois, schedule.resolution, mode, key, sample_options);
  });

  // Ordered reduction: index by index, sample by sample.
  RunRecord record;
  record.estimates = empty_series(qois.size(), data.horizon);
  for (std::size_t i = 0; i < schedule.levels.size(); ++i) {
    const long samples = schedule.levels[i].samples;
    for (std::size_t q = 0; q < qois.size(); ++q) {
      for (std::size_t n = 0; n <= static_cast<std::size_t>(data.horizon); ++n) {
        double sum = 0.0;
        for (long m = 0; m < samples; ++m) sum += results[first_task[i] + static_cast<std::size_t>(m)][q][n];
        record.estimates[q][n] += sum / static_cast<double>(samples);
      }
    }
  }

  record.method = schedule.method;
  record.model = std::string(to_string(model.kind));
  for (const auto& q : qois) record.qoi_names.push_back(q.name);
  record.work_units = schedule.work_units(data.horizon);
  record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record.seed = options.seed;
  record.run = options.run;
  record.horizon = data.horizon;
  record.schedule = schedule;
  return record;
}

}  // namespace

RandomStream initial_stream(const SampleKey& key) {
  return RandomStream(base_key(key, StreamPurpose::Initial, 0));
}

RandomStream dynamics_stream(const SampleKey& key, int time) {
  return RandomStream(base_key(key, StreamPurpose::Dynamics, time));
}

RandomStream perturbation_stream(const SampleKey& key, int time) {
  return RandomStream(base_key(key, StreamPurpose::Perturbation, time));
}

int truth_steps_for(std::span<const ScheduleParams> schedules) {
  int finest = 1;
  for (const auto& s : schedules) finest = std::max(finest, s.finest_steps());
  return 4 * finest;
}

std::vector<Qoi> default_qois(const ModelSpec& model) {
  std::vector<Qoi> out;
  for (int k = 0; k < model.state_dim; ++k) out.push_back(Qoi::component(k));
  return out;
}

std::vector<std::vector<double>> coupled_sample(const ModelSpec& model, const ObservationSequence& data,
                                                std::span<const Qoi> qois, Resolution resolution,
                                                CouplingMode mode, const SampleKey& key,
                                                const SampleOptions& options) {
  check_inputs(model, data, qois);
  auto out = empty_series(qois.size(), data.horizon);
  const Matrix gamma_chol = cholesky_factor(model.obs_noise_cov);
  int n = 0;
  try {
    RandomStream init = initial_stream(key);
    QuadCoupledState state = init_quad(model, key.index, resolution, init, mode);
    state.equalize_resolution = options.equalize_resolution;
    for (std::size_t q = 0; q < qois.size(); ++q) out[q][0] = delta_mixed(state, qois[q]);
    if (options.observer) options.observer(state);

    for (n = 1; n <= data.horizon; ++n) {
      RandomStream dynamics = dynamics_stream(key, n);
      state = quad_predict(std::move(state), model, dynamics, options.divisor);
      RandomStream perturbation = perturbation_stream(key, n);
      const PerturbedObs pobs =
          draw_perturbed_obs(data.obs[static_cast<std::size_t>(n)], gamma_chol, state.particles(), perturbation);
      state = quad_update(std::move(state), model, pobs);
      for (std::size_t q = 0; q < qois.size(); ++q) out[q][static_cast<std::size_t>(n)] = delta_mixed(state, qois[q]);
      if (options.observer) options.observer(state);
    }
  } catch (const DivergenceError& e) {
    DivergenceSite site = e.site();
    site.level1 = key.index.l1;
    site.level2 = key.index.l2;
    site.sample = static_cast<long>(key.sample);
    site.time = n;
    throw DivergenceError(site);
  }
  return out;
}

std::vector<std::vector<double>> enkf_trajectory(const ModelSpec& model, const ObservationSequence& data,
                                                 std::span<const Qoi> qois, int steps, int particles,
                                                 CovDivisor divisor, const SampleKey& key) {
  check_inputs(model, data, qois);
  if (steps < 1) throw ArgumentError("EnKF needs at least one timestep per interval");
  if (particles < 2) throw ArgumentError("EnKF needs at least two particles");
  auto out = empty_series(qois.size(), data.horizon);
  const Matrix gamma_chol = cholesky_factor(model.obs_noise_cov);

  RandomStream init = initial_stream(key);
  EnsembleState ens = draw_initial_ensemble(model, particles, init);
  for (std::size_t q = 0; q < qois.size(); ++q) out[q][0] = estimate_qoi(ens, qois[q]);

  std::vector<NoisePath> noise(static_cast<std::size_t>(particles));
  for (int n = 1; n <= data.horizon; ++n) {
    RandomStream dynamics = dynamics_stream(key, n);
    for (auto& path : noise) path = sample_noise(dynamics, steps, model.noise_channels(), model.obs_interval);
    try {
      ens = predict_ensemble(ens, model, noise);
    } catch (const DivergenceError& e) {
      DivergenceSite site = e.site();
      site.time = n;
      throw DivergenceError(site);
    }
    const Matrix gain = kalman_gain(sample_cov(ens, divisor), model.obs_operator, model.obs_noise_cov);
    RandomStream perturbation = perturbation_stream(key, n);
    const PerturbedObs pobs = draw_perturbed_obs(data.obs[static_cast<std::size_t>(n)], gamma_chol, particles,
                                                 perturbation);
    ens = update_ensemble(ens, gain, model.obs_operator, pobs);
    for (std::size_t q = 0; q < qois.size(); ++q) out[q][static_cast<std::size_t>(n)] = estimate_qoi(ens, qois[q]);
  }
  return out;
}

RunRecord run_enkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                   std::span<const Qoi> qois, const RunOptions& options) {
  if (schedule.method != Method::EnKF) throw ArgumentError("run_enkf needs an EnKF schedule");
  const auto start = std::chrono::steady_clock::now();
  const SampleKey key{options.seed, options.run, {0, 0}, 0, kFamilyEnsemble};
  RunRecord record;
  record.estimates = enkf_trajectory(model, data, qois, schedule.resolution.steps(0),
                                     schedule.resolution.particles(0), schedule.divisor, key);
  record.method = Method::EnKF;
  record.model = std::string(to_string(model.kind));
  for (const auto& q : qois) record.qoi_names.push_back(q.name);
  record.work_units = schedule.work_units(data.horizon);
  record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record.seed = options.seed;
  record.run = options.run;
  record.horizon = data.horizon;
  record.schedule = schedule;
  return record;
}

RunRecord run_mlenkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options) {
  if (schedule.method != Method::MLEnKF) throw ArgumentError("run_mlenkf needs an MLEnKF schedule");
  return run_coupled(schedule, model, data, qois, options, CouplingMode::MultiLevel, kFamilyMultilevel);
}

RunRecord run_mienkf(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options) {
  if (schedule.method != Method::MIEnKF) throw ArgumentError("run_mienkf needs an MIEnKF schedule");
  return run_coupled(schedule, model, data, qois, options, CouplingMode::MultiIndex, kFamilyEnsemble);
}

RunRecord run_filter(const ScheduleParams& schedule, const ModelSpec& model, const ObservationSequence& data,
                     std::span<const Qoi> qois, const RunOptions& options) {
  switch (schedule.method) {
    case Method::EnKF: return run_enkf(schedule, model, data, qois, options);
    case Method::MLEnKF: return run_mlenkf(schedule, model, data, qois, options);
    case Method::MIEnKF: return run_mienkf(schedule, model, data, qois, options);
  }
  throw ArgumentError("unknown method");
}

}  // namespace mienkf
