// Command line front end: filter, reference, rates and benchmark runs.
#include "mienkf/io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace mienkf;

namespace {

/// Accepts plain decimals and powers of two written as 2^-7.
double parse_tolerance(const std::string& text) {
  if (text.rfind("2^", 0) == 0) return std::ldexp(1.0, std::stoi(text.substr(2)));
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw ArgumentError("cannot parse tolerance '" + text + "'");
  return v;
}

/// Writes to `path`, or to stdout for "" and "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigurationError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct DataFlags {
  std::string model = "ou";
  int horizon = 10;
  std::uint64_t obs_seed = 1;
  int truth_steps = 0;

  void add(CLI::App* app) {
    app->add_option("--model", model, "ou, dw or langevin")->check(CLI::IsMember({"ou", "dw", "langevin"}));
    app->add_option("--horizon", horizon, "number of observation times")->check(CLI::PositiveNumber);
    app->add_option("--obs-seed", obs_seed, "seed of the synthetic truth and observations");
    app->add_option("--truth-steps", truth_steps,
                    "timesteps per observation interval for the truth (0: 4x the finest scheduled level)")
        ->check(CLI::NonNegativeNumber);
  }

  ModelSpec make() const { return make_model(parse_model_kind(model)); }
  ObservationSequence synthesize(const ModelSpec& spec, std::span<const ScheduleParams> schedules = {}) const {
    SynthesisOptions opt;
    opt.truth_steps = truth_steps > 0 ? truth_steps : std::max(truth_steps_for(schedules), 256);
    return synthesize_data(spec, horizon, obs_seed, opt);
  }
};

ModelProfile profile_or_default(const std::string& name, const ModelSpec& model) {
  return name.empty() ? default_profile(model.kind) : parse_profile(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-index, multilevel and plain ensemble Kalman filters"};
  app.set_config("--config", "", "key = value file mirroring the command line flags");
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)")
      ->envname("MIENKF_THREADS")
      ->check(CLI::NonNegativeNumber);

  // filter
  auto* filter = app.add_subcommand("filter", "run one estimator on synthetic data");
  DataFlags filter_data;
  filter_data.add(filter);
  std::string method = "mienkf", profile, json_path, csv_path = "-", dump_path;
  std::string epsilon_text = "2^-5";
  std::uint64_t seed = 0, run = 0;
  std::vector<int> dump_index{1, 1};
  filter->add_option("--method", method, "enkf, mlenkf or mienkf")
      ->check(CLI::IsMember({"enkf", "mlenkf", "mienkf"}));
  filter->add_option("--epsilon", epsilon_text, "tolerance, e.g. 0.03125 or 2^-5");
  filter->add_option("--profile", profile, "schedule constants: scalar, langevin or reference");
  filter->add_option("--seed", seed, "estimator seed");
  filter->add_option("--run", run, "run id within the seed");
  filter->add_option("--out", json_path, "write the run record as JSON");
  filter->add_option("--csv", csv_path, "estimates CSV (default stdout)");
  filter->add_option("--dump-quad", dump_path, "write every particle of coupled sample 0 at --dump-index");
  filter->add_option("--dump-index", dump_index, "multi-index for --dump-quad")->expected(2);

  // reference
  auto* reference = app.add_subcommand("reference", "Kalman reference (OU) or MIEnKF pseudoreference");
  DataFlags ref_data;
  ref_data.add(reference);
  std::string ref_out = "-", ref_eps_text = "2^-8";
  int ref_runs = 32;
  std::uint64_t ref_seed = 0;
  reference->add_option("--epsilon-ref", ref_eps_text, "pseudoreference tolerance");
  reference->add_option("--runs", ref_runs, "pseudoreference runs")->check(CLI::PositiveNumber);
  reference->add_option("--seed", ref_seed, "pseudoreference seed");
  reference->add_option("--out", ref_out, "reference CSV (default stdout)");

  // rates
  auto* rates = app.add_subcommand("rates", "moments of the mixed differences per multi-index");
  DataFlags rate_data;
  rate_data.add(rates);
  RateOptions rate_opt;
  std::string rates_out = "-";
  rates->add_option("--samples", rate_opt.samples, "independent samples per index")->check(CLI::Range(2L, 1L << 40));
  rates->add_option("--min-order", rate_opt.min_order, "smallest l1 + l2");
  rates->add_option("--max-order", rate_opt.max_order, "largest l1 + l2");
  rates->add_option("--n0", rate_opt.resolution.n0, "timesteps at l1 = 0")->check(CLI::PositiveNumber);
  rates->add_option("--p0", rate_opt.resolution.p0, "particles at l2 = 0")->check(CLI::Range(2, 1 << 20));
  rates->add_option("--seed", rate_opt.seed, "sampling seed");
  rates->add_option("--out", rates_out, "rates CSV (default stdout)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "RMSE and cost over tolerances");
  DataFlags bench_data;
  bench_data.add(bench);
  std::vector<std::string> bench_methods{"enkf", "mlenkf", "mienkf"};
  std::vector<std::string> bench_eps{"2^-4", "2^-5", "2^-6"};
  BenchmarkOptions bench_opt;
  std::string bench_profile, bench_ref, bench_out = "-", plot_path, ref_out_path;
  PseudoreferenceOptions pseudo;
  std::string pseudo_eps_text = "2^-8";
  bench->add_option("--methods", bench_methods, "methods to compare")
      ->check(CLI::IsMember({"enkf", "mlenkf", "mienkf"}))
      ->delimiter(',');
  bench->add_option("--epsilons", bench_eps, "tolerances, e.g. 2^-4,2^-5")->delimiter(',');
  bench->add_option("--runs", bench_opt.runs, "independent runs per tolerance")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_opt.seed, "estimator seed");
  bench->add_option("--profile", bench_profile, "schedule constants: scalar, langevin or reference");
  bench->add_option("--reference", bench_ref, "reference CSV; computed when omitted");
  bench->add_option("--reference-out", ref_out_path, "also write the reference used");
  bench->add_option("--epsilon-ref", pseudo_eps_text, "pseudoreference tolerance when computing one");
  bench->add_option("--reference-runs", pseudo.runs, "pseudoreference runs when computing one");
  bench->add_option("--out", bench_out, "benchmark CSV (default stdout)");
  bench->add_option("--plot-script", plot_path, "write a matplotlib script for the CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*filter) {
      const ModelSpec model = filter_data.make();
      const ScheduleParams schedule =
          build_schedule(parse_method(method), parse_tolerance(epsilon_text), profile_or_default(profile, model));
      const ObservationSequence data = filter_data.synthesize(model, std::span(&schedule, 1));
      const auto qois = default_qois(model);
      const RunRecord record = run_filter(schedule, model, data, qois, RunOptions{seed, run, threads});
      Output csv(csv_path);
      write_estimates_csv(csv.stream(), record);
      if (!json_path.empty()) {
        Output json(json_path);
        json.stream() << run_record_json(record) << '\n';
      }
      if (!dump_path.empty()) {
        if (schedule.method == Method::EnKF) throw ArgumentError("--dump-quad needs a coupled method");
        const MultiIndex idx{dump_index[0], dump_index[1]};
        Output dump(dump_path);
        write_quad_dump_header(dump.stream(), model.state_dim);
        SampleOptions opt;
        opt.divisor = schedule.divisor;
        opt.observer = [&](const QuadCoupledState& s) { write_quad_dump(dump.stream(), s); };
        const bool multilevel = schedule.method == Method::MLEnKF;
        const SampleKey key{seed, run, idx, 0, multilevel ? kFamilyMultilevel : kFamilyEnsemble};
        coupled_sample(model, data, qois, schedule.resolution,
                       multilevel ? CouplingMode::MultiLevel : CouplingMode::MultiIndex, key, opt);
      }
    } else if (*reference) {
      const ModelSpec model = ref_data.make();
      const ObservationSequence data = ref_data.synthesize(model);
      const ReferenceSolution ref = compute_pseudoreference(
          model, data, PseudoreferenceOptions{parse_tolerance(ref_eps_text), ref_runs, ref_seed, threads});
      Output out(ref_out);
      write_reference_csv(out.stream(), ref);
    } else if (*rates) {
      const ModelSpec model = rate_data.make();
      const ObservationSequence data = rate_data.synthesize(model);
      rate_opt.threads = threads;
      const RateTable table = estimate_rates(model, data, rate_opt);
      Output out(rates_out);
      write_rates_csv(out.stream(), table);
      const int first = std::max(rate_opt.min_order, 1);
      if (rate_opt.max_order > first) {
        const RateFit mean_fit = fit_rate(table, RateStatistic::AbsMean, RateTime::TimeAverage, first,
                                          rate_opt.max_order);
        const RateFit l2_fit = fit_rate(table, RateStatistic::L2, RateTime::TimeAverage, first, rate_opt.max_order);
        std::fprintf(stderr, "log2 slope |E[delta]|: %.3f   L2: %.3f\n", mean_fit.slope, l2_fit.slope);
      }
    } else if (*bench) {
      const ModelSpec model = bench_data.make();
      std::vector<Method> methods;
      for (const auto& m : bench_methods) methods.push_back(parse_method(m));
      std::vector<double> eps;
      for (const auto& e : bench_eps) eps.push_back(parse_tolerance(e));
      const ModelProfile run_profile = profile_or_default(bench_profile, model);
      std::vector<ScheduleParams> schedules;
      for (const Method m : methods) {
        for (const double e : eps) schedules.push_back(build_schedule(m, e, run_profile));
      }
      const ObservationSequence data = bench_data.synthesize(model, schedules);
      ReferenceSolution ref;
      if (!bench_ref.empty()) {
        std::ifstream in(bench_ref);
        if (!in) throw ConfigurationError("cannot read reference '" + bench_ref + "'");
        ref = read_reference_csv(in);
      } else {
        pseudo.epsilon = parse_tolerance(pseudo_eps_text);
        pseudo.threads = threads;
        ref = compute_pseudoreference(model, data, pseudo);
      }
      if (!ref_out_path.empty()) {
        Output out(ref_out_path);
        write_reference_csv(out.stream(), ref);
      }
      bench_opt.threads = threads;
      bench_opt.profile = run_profile;
      const BenchmarkResult result = run_benchmark(methods, eps, model, data, &ref, bench_opt);
      Output out(bench_out);
      write_benchmark_csv(out.stream(), result.records);
      if (!plot_path.empty()) {
        Output script(plot_path);
        const std::string csv_name = bench_out == "-" ? "benchmark.csv" : bench_out;
        script.stream() << plot_script(csv_name, "benchmark.png");
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mienkf: %s\n", e.what());
    return 1;
  }
  return 0;
}
