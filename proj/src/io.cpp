#include "mienkf/io.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace mienkf {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool next_row(std::istream& in, std::vector<std::string>& cells) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    cells = split_csv(line);
    return true;
  }
  return false;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ArgumentError("not a number: '" + s + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ArgumentError("not an integer: '" + s + "'");
  return v;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ArgumentError("CSV is missing column '" + name + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string run_record_json(const RunRecord& record, int indent) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(record.method));
  j["model"] = record.model;
  j["seed"] = record.seed;
  j["run"] = record.run;
  j["horizon"] = record.horizon;
  j["epsilon"] = record.schedule.epsilon;
  j["work_units"] = record.work_units;
  j["wall_time_s"] = record.wall_time;
  auto& s = j["schedule"];
  s["profile"] = std::string(to_string(record.schedule.profile));
  s["n0"] = record.schedule.resolution.n0;
  s["p0"] = record.schedule.resolution.p0;
  s["max_level"] = record.schedule.max_level;
  s["covariance_divisor"] = record.schedule.divisor == CovDivisor::Biased ? "P" : "P-1";
  s["levels"] = nlohmann::ordered_json::array();
  for (const auto& l : record.schedule.levels) {
    s["levels"].push_back({{"l1", l.index.l1},
                           {"l2", l.index.l2},
                           {"steps", record.schedule.resolution.steps(l.index.l1)},
                           {"particles", record.schedule.resolution.particles(l.index.l2)},
                           {"samples", l.samples}});
  }
  auto& est = j["estimates"];
  est = nlohmann::ordered_json::object();
  for (std::size_t q = 0; q < record.qoi_names.size(); ++q) est[record.qoi_names[q]] = record.estimates[q];
  return j.dump(indent);
}

void write_estimates_csv(std::ostream& out, const RunRecord& record) {
  out << "n";
  for (const auto& name : record.qoi_names) out << ',' << name;
  out << '\n';
  const std::size_t times = record.estimates.empty() ? 0 : record.estimates[0].size();
  for (std::size_t n = 0; n < times; ++n) {
    out << n;
    for (const auto& series : record.estimates) out << ',' << format_double(series[n]);
    out << '\n';
  }
}

void write_reference_csv(std::ostream& out, const ReferenceSolution& ref) {
  const std::size_t dim = ref.mean.size();
  const bool scalar = dim == 1;
  const bool with_cov = !ref.cov.empty();
  out << "n";
  for (std::size_t k = 0; k < dim; ++k) out << (scalar ? ",mean" : ",mean_x" + std::to_string(k));
  if (with_cov) {
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b)
        out << (scalar ? ",cov" : ",cov_x" + std::to_string(a) + "_x" + std::to_string(b));
    }
  }
  out << '\n';
  const std::size_t times = dim == 0 ? 0 : ref.mean[0].size();
  for (std::size_t n = 0; n < times; ++n) {
    out << n;
    for (std::size_t k = 0; k < dim; ++k) out << ',' << format_double(ref.mean[k][n]);
    if (with_cov) {
      for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = 0; b < dim; ++b)
          out << ',' << format_double(ref.cov[n](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      }
    }
    out << '\n';
  }
}

ReferenceSolution read_reference_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!next_row(in, header) || header.empty() || header[0] != "n") throw ArgumentError("not a reference CSV");
  std::vector<std::size_t> mean_cols, cov_cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("mean", 0) == 0) mean_cols.push_back(i);
    else if (header[i].rfind("cov", 0) == 0) cov_cols.push_back(i);
  }
  const std::size_t dim = mean_cols.size();
  if (dim == 0) throw ArgumentError("reference CSV has no mean column");
  if (!cov_cols.empty() && cov_cols.size() != dim * dim) throw ArgumentError("reference CSV has a partial covariance");
  ReferenceSolution ref;
  ref.source = cov_cols.empty() ? "pseudo" : "kalman";
  ref.mean.assign(dim, {});
  std::vector<std::string> row;
  while (next_row(in, row)) {
    if (row.size() != header.size()) throw ArgumentError("reference CSV row has the wrong number of cells");
    for (std::size_t k = 0; k < dim; ++k) ref.mean[k].push_back(parse_double(row[mean_cols[k]]));
    if (!cov_cols.empty()) {
      Matrix c(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      for (std::size_t i = 0; i < cov_cols.size(); ++i)
        c(static_cast<Eigen::Index>(i / dim), static_cast<Eigen::Index>(i % dim)) = parse_double(row[cov_cols[i]]);
      ref.cov.push_back(c);
    }
  }
  return ref;
}

void write_rates_csv(std::ostream& out, const RateTable& table) {
  out << "model,qoi,l1,l2,n,samples,mean,abs_mean,l2norm,mean_se,l2norm_se\n";
  for (const auto& e : table.entries) {
    for (std::size_t n = 0; n < e.moments.size(); ++n) {
      const auto& m = e.moments[n];
      out << table.model << ',' << table.qoi << ',' << e.index.l1 << ',' << e.index.l2 << ',' << n << ','
          << m.samples << ',' << format_double(m.mean) << ',' << format_double(m.abs_mean) << ','
          << format_double(m.l2) << ',' << format_double(m.mean_se) << ',' << format_double(m.l2_se) << '\n';
    }
  }
}

RateTable read_rates_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!next_row(in, header)) throw ArgumentError("empty rates CSV");
  const auto c_model = column(header, "model"), c_qoi = column(header, "qoi"), c_l1 = column(header, "l1"),
             c_l2 = column(header, "l2"), c_n = column(header, "n"), c_s = column(header, "samples"),
             c_mean = column(header, "mean"), c_abs = column(header, "abs_mean"), c_l2n = column(header, "l2norm"),
             c_mse = column(header, "mean_se"), c_lse = column(header, "l2norm_se");
  RateTable table;
  std::vector<std::string> row;
  while (next_row(in, row)) {
    if (row.size() != header.size()) throw ArgumentError("rates CSV row has the wrong number of cells");
    const MultiIndex idx{parse_int<int>(row[c_l1]), parse_int<int>(row[c_l2])};
    if (table.entries.empty() || table.entries.back().index != idx) {
      table.entries.push_back(RateEntry{idx, parse_int<long>(row[c_s]), {}});
    }
    RateEntry& e = table.entries.back();
    if (parse_int<std::size_t>(row[c_n]) != e.moments.size()) throw ArgumentError("rates CSV times out of order");
    SampleMoments m;
    m.samples = parse_int<long>(row[c_s]);
    m.mean = parse_double(row[c_mean]);
    m.abs_mean = parse_double(row[c_abs]);
    m.l2 = parse_double(row[c_l2n]);
    m.mean_se = parse_double(row[c_mse]);
    m.l2_se = parse_double(row[c_lse]);
    e.moments.push_back(m);
    table.model = row[c_model];
    table.qoi = row[c_qoi];
    table.samples = m.samples;
  }
  if (!table.entries.empty()) table.horizon = static_cast<int>(table.entries.front().moments.size()) - 1;
  return table;
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRecord> records) {
  out << "method,epsilon,rmse,rmse_se,walltime_s,work_units,runs\n";
  for (const auto& r : records) {
    out << to_string(r.method) << ',' << format_double(r.epsilon) << ',' << format_double(r.rmse) << ','
        << format_double(r.rmse_se) << ',' << format_double(r.walltime_s) << ',' << r.work_units << ',' << r.runs
        << '\n';
  }
}

std::vector<BenchmarkRecord> read_benchmark_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!next_row(in, header)) throw ArgumentError("empty benchmark CSV");
  const auto c_method = column(header, "method"), c_eps = column(header, "epsilon"), c_rmse = column(header, "rmse"),
             c_se = column(header, "rmse_se"), c_wall = column(header, "walltime_s"),
             c_work = column(header, "work_units"), c_runs = column(header, "runs");
  std::vector<BenchmarkRecord> out;
  std::vector<std::string> row;
  while (next_row(in, row)) {
    if (row.size() != header.size()) throw ArgumentError("benchmark CSV row has the wrong number of cells");
    BenchmarkRecord r;
    r.method = parse_method(row[c_method]);
    r.epsilon = parse_double(row[c_eps]);
    r.rmse = parse_double(row[c_rmse]);
    r.rmse_se = parse_double(row[c_se]);
    r.walltime_s = parse_double(row[c_wall]);
    r.work_units = parse_int<std::uint64_t>(row[c_work]);
    r.runs = parse_int<int>(row[c_runs]);
    out.push_back(r);
  }
  return out;
}

void write_quad_dump_header(std::ostream& out, int state_dim) {
  out << "time,l1,l2,member,particle";
  for (int k = 0; k < state_dim; ++k) out << ",x" << k;
  out << '\n';
}

void write_quad_dump(std::ostream& out, const QuadCoupledState& state) {
  for (const auto& layout : member_layout(state)) {
    const EnsembleState& ens = state.at(layout.member).ensemble;
    for (int i = 0; i < ens.size(); ++i) {
      out << state.time_index << ',' << state.index.l1 << ',' << state.index.l2 << ',' << to_string(layout.member)
          << ',' << layout.offset + i;
      for (double x : ens.particle(i)) out << ',' << format_double(x);
      out << '\n';
    }
  }
}

std::map<std::string, std::string> read_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("config line " + std::to_string(line_no) + " is not of the form key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigurationError("config line " + std::to_string(line_no) + " has an empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace mienkf
