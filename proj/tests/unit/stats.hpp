#pragma once

#include <cmath>
#include <span>
#include <vector>

// Small sample-moment helpers shared by the statistical tests.
struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double n = 0.0;

  double se() const { return std::sqrt(var / n); }
  // standard error of the unbiased variance estimate, assuming near-Gaussian data
  double var_se() const { return var * std::sqrt(2.0 / (n - 1.0)); }
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= m.n;
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= (m.n - 1.0);
  return m;
}

// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}
