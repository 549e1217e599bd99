#pragma once

#include "mienkf/estimators.hpp"
#include "mienkf/gaussian_filter.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mienkf {

/// Sample moments of one scalar statistic over S independent copies.
struct SampleMoments {
  long samples = 0;
  double mean = 0.0;
  double abs_mean = 0.0;     // |mean|
  double l2 = 0.0;           // sqrt(mean of squares)
  double mean_se = 0.0;      // standard error of the mean
  double l2_se = 0.0;        // delta-method standard error of l2
};

/// Moments from running sums of x, x^2, x^4 over `samples` values.
SampleMoments moments_from_sums(long samples, double sum, double sum_sq, double sum_quad);
SampleMoments summarize_samples(std::span<const double> values);

struct RateEntry {
  MultiIndex index;
  long samples = 0;
  /// Per observation time n = 0..horizon.
  std::vector<SampleMoments> moments;

  const SampleMoments& final() const { return moments.back(); }
};

struct RateTable {
  std::string model;
  std::string qoi;
  long samples = 0;
  int horizon = 0;
  Resolution resolution;
  std::uint64_t seed = 0;
  std::vector<RateEntry> entries;

  const RateEntry& at(MultiIndex index) const;
};

struct RateOptions {
  int min_order = 0;
  int max_order = 4;
  long samples = 10000;
  Resolution resolution{4, 20};
  std::uint64_t seed = 0;
  int threads = 1;
  int qoi_component = 0;
};

/// For every l with min_order <= l1 + l2 <= max_order, S independent coupled
/// samples against one fixed observation sequence.
RateTable estimate_rates(const ModelSpec& model, const ObservationSequence& data, const RateOptions& options);

enum class RateStatistic { AbsMean, L2 };
/// How each index contributes a value: the final observation time, or the
/// average over n = 1..horizon.
enum class RateTime { Final, TimeAverage };

struct RatePoint {
  MultiIndex index;
  double value = 0.0;
  double se = 0.0;
  bool used = true;
};

/// Index shapes with their own constant in front of N^-1 P^-1: l1 = 0,
/// l2 = 0, and both positive.
enum class IndexShape { ParticleEdge = 0, TimeEdge = 1, Interior = 2 };
IndexShape index_shape(MultiIndex index);

struct RateFit {
  double slope = 0.0;
  /// log2 intercept per IndexShape (NaN when the shape has no used point).
  std::array<double, 3> intercepts{};
  std::vector<RatePoint> points;
};

/// Least-squares fit of log2 value against l1 + l2 over every index with
/// first_order <= l1 + l2 <= last_order, with one common slope and a separate
/// intercept per index shape. Points whose standard error is at least
/// `max_relative_se` times their value are dropped as noise-limited.
RateFit fit_rate(const RateTable& table, RateStatistic statistic, RateTime time, int first_order, int last_order,
                 double max_relative_se = 0.3);

/// Slope of the least-squares line through (log2 x, log2 y).
double fit_log2_slope(std::span<const double> x, std::span<const double> y);

/// sqrt(1/(S(N+1)) sum_i sum_n (est_i(n) - ref(n))^2) for QoI `q` of every run.
double compute_rmse(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q = 0);
/// Delta-method standard error of compute_rmse over the run-to-run spread.
double compute_rmse_se(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q = 0);

/// Reference filter means per state component: reference.mean[k][n].
struct ReferenceSolution {
  std::string source;  // "kalman" or "pseudo"
  std::vector<std::vector<double>> mean;
  /// Kalman covariances (empty for pseudoreferences).
  std::vector<Matrix> cov;
};

struct PseudoreferenceOptions {
  double epsilon = 1.0 / 256.0;
  int runs = 32;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Exact Kalman means for linear models; otherwise the average of `runs`
/// independent MIEnKF runs with the reference constants.
ReferenceSolution compute_pseudoreference(const ModelSpec& model, const ObservationSequence& data,
                                          const PseudoreferenceOptions& options = {});

struct BenchmarkRecord {
  Method method = Method::MIEnKF;
  double epsilon = 0.0;
  double rmse = 0.0;
  double rmse_se = 0.0;
  double walltime_s = 0.0;  // mean over runs
  std::uint64_t work_units = 0;
  int runs = 0;

  bool operator==(const BenchmarkRecord&) const = default;
};

struct BenchmarkOptions {
  int runs = 32;
  std::uint64_t seed = 0;
  int threads = 1;
  int qoi_component = 0;
  std::optional<ModelProfile> profile;
  /// Keep every RunRecord in the result (for reuse by later analyses).
  bool keep_runs = false;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  /// runs[i] belongs to records[i] when keep_runs is set.
  std::vector<std::vector<RunRecord>> runs;
};

/// Throws ConfigurationError when `reference` is null.
BenchmarkResult run_benchmark(std::span<const Method> methods, std::span<const double> epsilons,
                              const ModelSpec& model, const ObservationSequence& data,
                              const ReferenceSolution* reference, const BenchmarkOptions& options = {});

/// Summarizes already computed runs of one (method, epsilon) cell.
BenchmarkRecord summarize_runs(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q = 0);

/// Standalone matplotlib script plotting RMSE against wall time from a
/// benchmark CSV, with guide lines of slope -1/2, -1/3 and the log-corrected
/// multilevel curve.
std::string plot_script(const std::string& csv_path, const std::string& image_path);

}  // namespace mienkf
