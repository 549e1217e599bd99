#include "mienkf/harness.hpp"

#include "mienkf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mienkf {

namespace {

struct MomentSums {
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  long double sum_quad = 0.0L;

  void add(double x) {
    const long double v = x;
    sum += v;
    sum_sq += v * v;
    sum_quad += v * v * v * v;
  }
};

SampleMoments moments_from_long_sums(long samples, const MomentSums& s) {
  if (samples < 1) throw ArgumentError("moments need at least one sample");
  const long double count = static_cast<long double>(samples);
  const long double mean = s.sum / count;
  const long double second = s.sum_sq / count;
  SampleMoments m;
  m.samples = samples;
  m.mean = static_cast<double>(mean);
  m.abs_mean = std::abs(m.mean);
  m.l2 = static_cast<double>(std::sqrt(std::max(second, 0.0L)));
  if (samples > 1) {
    const long double var = std::max((s.sum_sq - count * mean * mean) / (count - 1), 0.0L);
    const long double var_sq = std::max((s.sum_quad - count * second * second) / (count - 1), 0.0L);
    m.mean_se = static_cast<double>(std::sqrt(var / count));
    const double second_se = static_cast<double>(std::sqrt(var_sq / count));
    m.l2_se = m.l2 > 0.0 ? second_se / (2.0 * m.l2) : 0.0;
  }
  return m;
}

void check_reference(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q) {
  if (runs.empty()) throw ArgumentError("RMSE needs at least one run");
  for (const auto& r : runs) {
    if (q >= r.estimates.size()) throw ArgumentError("run has no QoI with that index");
    if (r.estimates[q].size() != reference.size())
      throw ArgumentError("run and reference cover different numbers of observation times");
  }
}

/// Per-run time-averaged squared error.
std::vector<double> run_errors(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q) {
  check_reference(runs, reference, q);
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& r : runs) {
    double acc = 0.0;
    for (std::size_t n = 0; n < reference.size(); ++n) {
      const double e = r.estimates[q][n] - reference[n];
      acc += e * e;
    }
    out.push_back(acc / static_cast<double>(reference.size()));
  }
  return out;
}

}  // namespace

SampleMoments moments_from_sums(long samples, double sum, double sum_sq, double sum_quad) {
  return moments_from_long_sums(samples, MomentSums{sum, sum_sq, sum_quad});
}

SampleMoments summarize_samples(std::span<const double> values) {
  MomentSums s;
  for (double v : values) s.add(v);
  return moments_from_long_sums(static_cast<long>(values.size()), s);
}

const RateEntry& RateTable::at(MultiIndex index) const {
  for (const auto& e : entries) {
    if (e.index == index) return e;
  }
  throw ArgumentError("index not present in the rate table");
}

RateTable estimate_rates(const ModelSpec& model, const ObservationSequence& data, const RateOptions& options) {
  if (options.samples < 2) throw ArgumentError("rate estimation needs S >= 2");
  if (options.min_order < 0 || options.max_order < options.min_order) throw ArgumentError("invalid level range");
  if (options.qoi_component < 0 || options.qoi_component >= model.state_dim)
    throw ArgumentError("QoI component out of range");
  const std::vector<Qoi> qois{Qoi::component(options.qoi_component)};
  const int threads = resolve_threads(options.threads);
  const std::size_t times = static_cast<std::size_t>(data.horizon) + 1;

  RateTable table;
  table.model = std::string(to_string(model.kind));
  table.qoi = qois[0].name;
  table.samples = options.samples;
  table.horizon = data.horizon;
  table.resolution = options.resolution;
  table.seed = options.seed;

  constexpr long kBlock = 512;
  for (const MultiIndex idx : index_set(options.max_order)) {
    if (idx.order() < options.min_order) continue;
    std::vector<MomentSums> sums(times);
    for (long begin = 0; begin < options.samples; begin += kBlock) {
      const long count = std::min(kBlock, options.samples - begin);
      std::vector<std::vector<double>> block(static_cast<std::size_t>(count));
      parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
        const SampleKey key{options.seed, 0, idx, static_cast<std::uint64_t>(begin) + i, kFamilyEnsemble};
        block[i] = coupled_sample(model, data, qois, options.resolution, CouplingMode::MultiIndex, key)[0];
      });
      for (const auto& sample : block) {
        for (std::size_t n = 0; n < times; ++n) sums[n].add(sample[n]);
      }
    }
    RateEntry entry;
    entry.index = idx;
    entry.samples = options.samples;
    for (const auto& s : sums) entry.moments.push_back(moments_from_long_sums(options.samples, s));
    table.entries.push_back(std::move(entry));
  }
  return table;
}

double fit_log2_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope fit needs two or more matching points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ArgumentError("log-log fit needs positive values");
    lx.push_back(std::log2(x[i]));
    ly.push_back(std::log2(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw ArgumentError("slope fit needs distinct abscissae");
  return sxy / sxx;
}

IndexShape index_shape(MultiIndex index) {
  if (index.l1 == 0) return IndexShape::ParticleEdge;
  if (index.l2 == 0) return IndexShape::TimeEdge;
  return IndexShape::Interior;
}

RateFit fit_rate(const RateTable& table, RateStatistic statistic, RateTime time, int first_order, int last_order,
                 double max_relative_se) {
  RateFit fit;
  for (const auto& e : table.entries) {
    if (e.index.order() < first_order || e.index.order() > last_order) continue;
    RatePoint p;
    p.index = e.index;
    auto value_of = [&](const SampleMoments& m) { return statistic == RateStatistic::AbsMean ? m.abs_mean : m.l2; };
    auto se_of = [&](const SampleMoments& m) { return statistic == RateStatistic::AbsMean ? m.mean_se : m.l2_se; };
    if (time == RateTime::Final || e.moments.size() < 2) {
      p.value = value_of(e.final());
      p.se = se_of(e.final());
    } else {
      const double count = static_cast<double>(e.moments.size() - 1);
      double var = 0.0;
      for (std::size_t n = 1; n < e.moments.size(); ++n) {
        p.value += value_of(e.moments[n]) / count;
        var += se_of(e.moments[n]) * se_of(e.moments[n]);
      }
      p.se = std::sqrt(var) / count;
    }
    p.used = p.value > 0.0 && p.se < max_relative_se * p.value;
    fit.points.push_back(p);
  }

  std::array<double, 3> count{}, mx{}, my{};
  for (const auto& p : fit.points) {
    if (!p.used) continue;
    const auto c = static_cast<std::size_t>(index_shape(p.index));
    count[c] += 1.0;
    mx[c] += p.index.order();
    my[c] += std::log2(p.value);
  }
  fit.slope = std::numeric_limits<double>::quiet_NaN();
  fit.intercepts.fill(std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < 3; ++c) {
    if (count[c] > 0) {
      mx[c] /= count[c];
      my[c] /= count[c];
    }
  }
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : fit.points) {
    if (!p.used) continue;
    const auto c = static_cast<std::size_t>(index_shape(p.index));
    const double dx = p.index.order() - mx[c];
    sxy += dx * (std::log2(p.value) - my[c]);
    sxx += dx * dx;
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  for (std::size_t c = 0; c < 3; ++c) {
    if (count[c] > 0) fit.intercepts[c] = my[c] - fit.slope * mx[c];
  }
  return fit;
}

double compute_rmse(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q) {
  const auto errors = run_errors(runs, reference, q);
  double acc = 0.0;
  for (double e : errors) acc += e;
  return std::sqrt(acc / static_cast<double>(errors.size()));
}

double compute_rmse_se(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q) {
  const auto errors = run_errors(runs, reference, q);
  if (errors.size() < 2) return 0.0;
  const SampleMoments m = summarize_samples(errors);
  const double rmse = std::sqrt(m.mean);
  return rmse > 0.0 ? m.mean_se / (2.0 * rmse) : 0.0;
}

ReferenceSolution compute_pseudoreference(const ModelSpec& model, const ObservationSequence& data,
                                          const PseudoreferenceOptions& options) {
  ReferenceSolution ref;
  if (model.kind == ModelKind::OrnsteinUhlenbeck) {
    ref.source = "kalman";
    const auto beliefs = kalman_reference(model, data);
    ref.mean.assign(static_cast<std::size_t>(model.state_dim), {});
    for (const auto& b : beliefs) {
      for (int k = 0; k < model.state_dim; ++k) ref.mean[static_cast<std::size_t>(k)].push_back(b.mean(k));
      ref.cov.push_back(b.cov);
    }
    return ref;
  }
  if (options.runs < 1) throw ArgumentError("pseudoreference needs at least one run");
  ref.source = "pseudo";
  const ScheduleParams schedule = build_schedule(Method::MIEnKF, options.epsilon, ModelProfile::Reference);
  const auto qois = default_qois(model);
  ref.mean.assign(qois.size(), std::vector<double>(static_cast<std::size_t>(data.horizon) + 1, 0.0));
  for (int r = 0; r < options.runs; ++r) {
    const RunRecord run = run_mienkf(schedule, model, data, qois,
                                     RunOptions{options.seed, static_cast<std::uint64_t>(r), options.threads});
    for (std::size_t q = 0; q < qois.size(); ++q) {
      for (std::size_t n = 0; n < ref.mean[q].size(); ++n) ref.mean[q][n] += run.estimates[q][n] / options.runs;
    }
  }
  return ref;
}

BenchmarkRecord summarize_runs(std::span<const RunRecord> runs, std::span<const double> reference, std::size_t q) {
  BenchmarkRecord rec;
  rec.rmse = compute_rmse(runs, reference, q);
  rec.rmse_se = compute_rmse_se(runs, reference, q);
  double wall = 0.0;
  for (const auto& r : runs) wall += r.wall_time;
  rec.walltime_s = wall / static_cast<double>(runs.size());
  rec.method = runs.front().method;
  rec.epsilon = runs.front().schedule.epsilon;
  rec.work_units = runs.front().work_units;
  rec.runs = static_cast<int>(runs.size());
  return rec;
}

BenchmarkResult run_benchmark(std::span<const Method> methods, std::span<const double> epsilons,
                              const ModelSpec& model, const ObservationSequence& data,
                              const ReferenceSolution* reference, const BenchmarkOptions& options) {
  if (reference == nullptr || reference->mean.empty())
    throw ConfigurationError("benchmark needs a reference solution (Kalman or pseudoreference)");
  if (options.runs < 1) throw ArgumentError("benchmark needs at least one run per tolerance");
  const std::size_t q = static_cast<std::size_t>(options.qoi_component);
  if (q >= reference->mean.size() || options.qoi_component >= model.state_dim)
    throw ArgumentError("QoI component out of range");
  const auto& ref_series = reference->mean[q];
  if (ref_series.size() != static_cast<std::size_t>(data.horizon) + 1)
    throw ConfigurationError("reference does not cover the observation horizon");

  const auto qois = default_qois(model);
  const ModelProfile profile = options.profile.value_or(default_profile(model.kind));
  BenchmarkResult result;
  for (const Method method : methods) {
    for (const double eps : epsilons) {
      const ScheduleParams schedule = build_schedule(method, eps, profile);
      std::vector<RunRecord> runs;
      runs.reserve(static_cast<std::size_t>(options.runs));
      for (int r = 0; r < options.runs; ++r) {
        runs.push_back(run_filter(schedule, model, data, qois,
                                  RunOptions{options.seed, static_cast<std::uint64_t>(r), options.threads}));
      }
      result.records.push_back(summarize_runs(runs, ref_series, q));
      if (options.keep_runs) result.runs.push_back(std::move(runs));
    }
  }
  return result;
}

std::string plot_script(const std::string& csv_path, const std::string& image_path) {
  std::ostringstream os;
  os << R"(#!/usr/bin/env python3
# RMSE against wall time from a mienkf benchmark CSV.
import csv
import math
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else ")"
     << csv_path << R"("
image_path = sys.argv[2] if len(sys.argv) > 2 else ")"
     << image_path << R"("

rows = {}
with open(csv_path, newline="") as f:
    for row in csv.DictReader(f):
        rows.setdefault(row["method"], []).append(row)

fig, ax = plt.subplots(figsize=(6, 4.5))
markers = {"enkf": "o", "mlenkf": "s", "mienkf": "^"}
all_t, all_e = [], []
for method, items in sorted(rows.items()):
    items.sort(key=lambda r: float(r["walltime_s"]))
    t = [float(r["walltime_s"]) for r in items]
    e = [float(r["rmse"]) for r in items]
    all_t += t
    all_e += e
    ax.loglog(t, e, marker=markers.get(method, "x"), label=method.upper().replace("ENKF", "EnKF"))

if all_t:
    t0, e0 = min(all_t), max(all_e)
    ts = [t0 * 10 ** (k / 10) for k in range(0, 41)]
    ax.loglog(ts, [e0 * (t / t0) ** (-1 / 2) for t in ts], "k--", lw=0.8, label="slope -1/2")
    ax.loglog(ts, [e0 * (t / t0) ** (-1 / 3) for t in ts], "k:", lw=0.8, label="slope -1/3")
    # cost ~ eps^-2 |log eps|^3, inverted numerically for eps
    def ml_eps(t):
        lo, hi = 1e-12, 0.2
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if mid ** -2 * abs(math.log(mid)) ** 3 > t / t0 * e0 ** -2 * abs(math.log(e0)) ** 3:
                lo = mid
            else:
                hi = mid
        return hi
    if e0 < 0.2:
        ax.loglog(ts, [ml_eps(t) for t in ts], "k-.", lw=0.8, label="log-corrected -1/2")

ax.set_xlabel("wall time [s]")
ax.set_ylabel("RMSE")
ax.legend()
fig.tight_layout()
fig.savefig(image_path, dpi=150)
)";
  return os.str();
}

}  // namespace mienkf
