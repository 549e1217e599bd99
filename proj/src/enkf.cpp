#include "mienkf/enkf.hpp"

#include "mienkf/observations.hpp"

#include <cmath>

namespace mienkf {

Qoi Qoi::component(int k) {
  return Qoi{"x" + std::to_string(k), [k](std::span<const double> u) { return u[static_cast<std::size_t>(k)]; }};
}

EnsembleState draw_initial_ensemble(const ModelSpec& model, int particles, RandomStream& stream) {
  if (particles < 1) throw ArgumentError("ensemble needs at least one particle");
  const int d = model.state_dim;
  const Matrix chol = cholesky_factor(model.init_cov);
  EnsembleState ens;
  ens.particles.resize(particles, d);
  Vector z(d);
  for (int i = 0; i < particles; ++i) {
    stream.fill_normal({z.data(), static_cast<std::size_t>(d)});
    ens.particles.row(i) = (model.init_mean + chol * z).transpose();
  }
  ens.time_index = 0;
  ens.role = EnsembleRole::Updated;
  return ens;
}

PerturbedObs draw_perturbed_obs(const Vector& y, const Matrix& gamma_chol, int particles, RandomStream& stream) {
  const auto m = y.size();
  PerturbedObs pobs;
  pobs.base_obs = y;
  pobs.perturbations.resize(particles, m);
  Vector z(m);
  for (int i = 0; i < particles; ++i) {
    stream.fill_normal({z.data(), static_cast<std::size_t>(m)});
    pobs.perturbations.row(i) = (gamma_chol * z).transpose();
  }
  return pobs;
}

EnsembleState predict_ensemble(const EnsembleState& ens, const ModelSpec& model, std::span<const NoisePath> noise) {
  if (ens.role != EnsembleRole::Updated) throw ArgumentError("prediction expects an updated ensemble");
  if (noise.size() != static_cast<std::size_t>(ens.size()))
    throw ArgumentError("need exactly one noise path per particle");
  EnsembleState out = ens;
  for (int i = 0; i < out.size(); ++i) {
    const NoisePath& path = noise[static_cast<std::size_t>(i)];
    if (path.channels != model.noise_channels()) throw ArgumentError("noise channel count mismatch");
    try {
      propagate_in_place(model, out.particle(i), path.increments, path.steps, path.dt);
    } catch (const DivergenceError& e) {
      DivergenceSite site = e.site();
      site.particle = i;
      throw DivergenceError(site);
    }
  }
  out.role = EnsembleRole::Predicted;
  out.time_index = ens.time_index + 1;
  return out;
}

Matrix sample_cov(const EnsembleState& ens, CovDivisor divisor) {
  const int p = ens.size();
  if (p < 2) throw ArgumentError("sample covariance needs at least two particles");
  const Eigen::RowVectorXd mean = ens.particles.colwise().mean();
  const ParticleMatrix centered = ens.particles.rowwise() - mean;
  const double denom = divisor == CovDivisor::Biased ? p : p - 1;
  Matrix cov = (centered.transpose() * centered) / denom;
  return 0.5 * (cov + cov.transpose());
}

Matrix kalman_gain(const Matrix& cov, const Matrix& obs_operator, const Matrix& obs_noise_cov) {
  if (cov.rows() != cov.cols() || obs_operator.cols() != cov.rows() ||
      obs_noise_cov.rows() != obs_operator.rows() || obs_noise_cov.cols() != obs_operator.rows())
    throw ArgumentError("kalman_gain: dimension mismatch");
  const Matrix hc = obs_operator * cov;  // m x d
  const Matrix innovation = hc * obs_operator.transpose() + obs_noise_cov;
  Eigen::LLT<Matrix> llt(innovation);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not positive definite");
  // K^T = S^-1 H C since both S and C are symmetric.
  const Matrix gain_t = llt.solve(hc);
  if (!gain_t.allFinite()) throw NumericalError("Kalman gain is not finite");
  return gain_t.transpose();
}

namespace detail {

void apply_update(ParticleMatrix& particles, const Matrix& gain, const Matrix& obs_operator,
                  const PerturbedObs& pobs, int first_row) {
  const auto count = particles.rows();
  if (first_row < 0 || first_row + count > pobs.perturbations.rows())
    throw ArgumentError("not enough perturbed observations for the ensemble");
  if (gain.rows() != particles.cols() || gain.cols() != pobs.base_obs.size() ||
      obs_operator.rows() != gain.cols() || obs_operator.cols() != particles.cols())
    throw ArgumentError("update: dimension mismatch");
  // Row form of v_hat = v + K (y_tilde - H v).
  ParticleMatrix innovation = pobs.perturbations.middleRows(first_row, count);
  innovation.rowwise() += pobs.base_obs.transpose();
  innovation.noalias() -= particles * obs_operator.transpose();
  particles.noalias() += innovation * gain.transpose();
}

}  // namespace detail

EnsembleState update_ensemble(const EnsembleState& ens, const Matrix& gain, const Matrix& obs_operator,
                              const PerturbedObs& pobs) {
  if (ens.role != EnsembleRole::Predicted) throw ArgumentError("update expects a predicted ensemble");
  if (pobs.size() != ens.size()) throw ArgumentError("perturbed observation count must equal ensemble size");
  EnsembleState out = ens;
  detail::apply_update(out.particles, gain, obs_operator, pobs, 0);
  out.role = EnsembleRole::Updated;
  return out;
}

double estimate_qoi(const EnsembleState& ens, const Qoi& qoi) {
  if (ens.role != EnsembleRole::Updated) throw ArgumentError("QoI estimates are taken on updated ensembles");
  double sum = 0.0;
  for (int i = 0; i < ens.size(); ++i) sum += qoi.eval(ens.particle(i));
  return sum / ens.size();
}

}  // namespace mienkf
