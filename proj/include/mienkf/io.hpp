#pragma once

#include "mienkf/harness.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mienkf {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

std::string run_record_json(const RunRecord& record, int indent = 2);
/// n followed by one column per QoI.
void write_estimates_csv(std::ostream& out, const RunRecord& record);

/// n,mean,cov for scalar states; n,mean_x0,..,cov_x0_x0,.. otherwise. cov columns
/// are omitted for pseudoreferences.
void write_reference_csv(std::ostream& out, const ReferenceSolution& ref);
ReferenceSolution read_reference_csv(std::istream& in);

/// One row per (index, observation time).
void write_rates_csv(std::ostream& out, const RateTable& table);
RateTable read_rates_csv(std::istream& in);

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRecord> records);
std::vector<BenchmarkRecord> read_benchmark_csv(std::istream& in);

/// time,member,particle,x0,.. rows for every particle of every sub-ensemble.
void write_quad_dump_header(std::ostream& out, int state_dim);
void write_quad_dump(std::ostream& out, const QuadCoupledState& state);

/// key = value lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_config(std::istream& in);

}  // namespace mienkf
