#include "mienkf/observations.hpp"

#include <cmath>

namespace mienkf {

Matrix cholesky_factor(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    // Positive semi-definite with zero blocks (e.g. a deterministic initial
    // condition) is fine for sampling; fall back to LDLT.
    Eigen::LDLT<Matrix> ldlt(cov);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw NumericalError("covariance is not positive semi-definite");
    const Matrix d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Matrix l = ldlt.matrixL();
    return ldlt.transpositionsP().transpose() * (l * d);
  }
  return llt.matrixL();
}

ObservationSequence synthesize_data(const ModelSpec& model, int horizon, std::uint64_t seed,
                                    const SynthesisOptions& options) {
  if (horizon < 1) throw ArgumentError("horizon must be at least one observation time");
  if (options.truth_steps < 1) throw ArgumentError("truth needs at least one step per interval");

  ObservationSequence data;
  data.obs_operator = model.obs_operator;
  data.obs_noise_cov = model.obs_noise_cov;
  data.obs_interval = model.obs_interval;
  data.horizon = horizon;
  data.truth_steps = options.truth_steps;
  data.seed = seed;
  data.truth.reserve(static_cast<std::size_t>(horizon) + 1);
  data.obs.reserve(static_cast<std::size_t>(horizon) + 1);

  RandomStream init({.seed = seed, .purpose = StreamPurpose::Truth, .run = options.run, .time = 0});
  Vector z(model.state_dim);
  init.fill_normal({z.data(), static_cast<std::size_t>(z.size())});
  Vector u = model.init_mean + cholesky_factor(model.init_cov) * z;
  data.truth.push_back(u);
  data.obs.emplace_back();

  const Matrix gamma_chol = cholesky_factor(model.obs_noise_cov);
  const double dt = model.obs_interval / options.truth_steps;
  std::vector<double> dw(static_cast<std::size_t>(options.truth_steps * model.noise_channels()));
  for (int n = 1; n <= horizon; ++n) {
    RandomStream dyn({.seed = seed, .purpose = StreamPurpose::Truth, .run = options.run,
                      .time = static_cast<std::uint64_t>(n)});
    dyn.fill_normal(dw, std::sqrt(dt));
    propagate_in_place(model, {u.data(), static_cast<std::size_t>(u.size())}, dw, options.truth_steps, dt);
    data.truth.push_back(u);

    Vector y = model.obs_operator * u;
    if (!options.noiseless) {
      RandomStream noise({.seed = seed, .purpose = StreamPurpose::Observation, .run = options.run,
                          .time = static_cast<std::uint64_t>(n)});
      Vector eta(model.obs_dim());
      noise.fill_normal({eta.data(), static_cast<std::size_t>(eta.size())});
      y += gamma_chol * eta;
    }
    data.obs.push_back(std::move(y));
  }
  return data;
}

}  // namespace mienkf
