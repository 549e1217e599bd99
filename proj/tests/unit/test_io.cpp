#include "mienkf/io.hpp"
#include "mienkf/observations.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mienkf;

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Io, BenchmarkCsvRoundTrip) {
  std::vector<BenchmarkRecord> recs{{Method::EnKF, 0.0625, 0.01, 0.001, 1.5, 614400, 32},
                                    {Method::MIEnKF, 1.0 / 128, 1.0 / 3.0, 0.0, 0.25, 123456789012ull, 8}};
  std::stringstream ss;
  write_benchmark_csv(ss, recs);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "method,epsilon,rmse,rmse_se,walltime_s,work_units,runs");
  EXPECT_EQ(read_benchmark_csv(ss), recs);
}

TEST(Io, RatesCsvRoundTrip) {
  const ModelSpec ou = make_ou();
  RateOptions opt;
  opt.max_order = 1;
  opt.samples = 8;
  const RateTable t = estimate_rates(ou, synthesize_data(ou, 2, 1), opt);
  std::stringstream ss;
  write_rates_csv(ss, t);
  const RateTable r = read_rates_csv(ss);
  EXPECT_EQ(r.model, "ou");
  EXPECT_EQ(r.qoi, "x0");
  EXPECT_EQ(r.horizon, 2);
  ASSERT_EQ(r.entries.size(), t.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    EXPECT_EQ(r.entries[i].index, t.entries[i].index);
    for (std::size_t n = 0; n < 3; ++n) {
      EXPECT_EQ(r.entries[i].moments[n].mean, t.entries[i].moments[n].mean);
      EXPECT_EQ(r.entries[i].moments[n].l2_se, t.entries[i].moments[n].l2_se);
    }
  }
}

TEST(Io, ReferenceCsvRoundTrip) {
  const ModelSpec ou = make_ou();
  const ReferenceSolution k = compute_pseudoreference(ou, synthesize_data(ou, 3, 1));
  std::stringstream ss;
  write_reference_csv(ss, k);
  EXPECT_EQ(ss.str().substr(0, 11), "n,mean,cov\n");
  const ReferenceSolution back = read_reference_csv(ss);
  EXPECT_EQ(back.source, "kalman");
  EXPECT_EQ(back.mean, k.mean);
  ASSERT_EQ(back.cov.size(), 4u);
  EXPECT_EQ(back.cov[2](0, 0), k.cov[2](0, 0));

  ReferenceSolution pseudo;
  pseudo.source = "pseudo";
  pseudo.mean = {{0.0, 0.5}, {1.0, -1.0}};
  std::stringstream ps;
  write_reference_csv(ps, pseudo);
  EXPECT_EQ(ps.str().substr(0, ps.str().find('\n')), "n,mean_x0,mean_x1");
  const ReferenceSolution pb = read_reference_csv(ps);
  EXPECT_EQ(pb.source, "pseudo");
  EXPECT_EQ(pb.mean, pseudo.mean);

  std::stringstream bad("x,y\n1,2\n");
  EXPECT_THROW(read_reference_csv(bad), ArgumentError);
}

TEST(Io, RunRecordJsonFields) {
  const ModelSpec ou = make_ou();
  const ObservationSequence data = synthesize_data(ou, 2, 1);
  const ScheduleParams s = build_schedule(Method::MIEnKF, 0.25, ModelProfile::Scalar);
  const RunRecord r = run_mienkf(s, ou, data, default_qois(ou), {3, 1, 1});
  const auto j = nlohmann::json::parse(run_record_json(r));
  EXPECT_EQ(j["method"], "mienkf");
  EXPECT_EQ(j["model"], "ou");
  EXPECT_EQ(j["seed"], 3);
  EXPECT_EQ(j["run"], 1);
  EXPECT_EQ(j["horizon"], 2);
  EXPECT_EQ(j["epsilon"], 0.25);
  EXPECT_EQ(j["work_units"].get<std::uint64_t>(), r.work_units);
  EXPECT_EQ(j["schedule"]["covariance_divisor"], "P");
  EXPECT_EQ(j["schedule"]["levels"].size(), s.levels.size());
  EXPECT_EQ(j["schedule"]["levels"][0]["samples"], s.levels[0].samples);
  EXPECT_EQ(j["estimates"]["x0"].get<std::vector<double>>(), r.estimates[0]);
}

TEST(Io, EstimatesCsv) {
  RunRecord r;
  r.qoi_names = {"x0", "x1"};
  r.estimates = {{0.5, 0.25}, {1.0, 2.0}};
  std::stringstream ss;
  write_estimates_csv(ss, r);
  EXPECT_EQ(ss.str(), "n,x0,x1\n0,0.5,1\n1,0.25,2\n");
}

TEST(Io, QuadDump) {
  StreamKey key;
  RandomStream s(key);
  const QuadCoupledState state = init_quad(make_ou(), {1, 1}, {2, 4}, s);
  std::stringstream ss;
  write_quad_dump_header(ss, 1);
  write_quad_dump(ss, state);
  std::string line;
  int rows = -1;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 8 + 8 + 4 * 4);
}

TEST(Io, ConfigParsing) {
  std::stringstream ss("# comment\nmodel = dw\n\n  seed=4  # trailing\n");
  const auto cfg = read_config(ss);
  EXPECT_EQ(cfg.at("model"), "dw");
  EXPECT_EQ(cfg.at("seed"), "4");
  EXPECT_EQ(cfg.size(), 2u);
  std::stringstream bad("model dw\n");
  EXPECT_THROW(read_config(bad), ConfigurationError);
  std::stringstream empty_key(" = 3\n");
  EXPECT_THROW(read_config(empty_key), ConfigurationError);
}
