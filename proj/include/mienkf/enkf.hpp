#pragma once

#include "mienkf/random.hpp"
#include "mienkf/sde_models.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mienkf {

enum class EnsembleRole { Predicted, Updated };

/// Divisor of the sample covariance: 1/P (the coupled estimators) or 1/(P-1)
/// (plain EnKF).
enum class CovDivisor { Biased, Unbiased };

struct EnsembleState {
  ParticleMatrix particles;  // P x d
  int time_index = 0;
  EnsembleRole role = EnsembleRole::Updated;

  int size() const { return static_cast<int>(particles.rows()); }
  int dim() const { return static_cast<int>(particles.cols()); }
  std::span<double> particle(int i) {
    return {particles.data() + static_cast<std::ptrdiff_t>(i) * particles.cols(),
            static_cast<std::size_t>(particles.cols())};
  }
  std::span<const double> particle(int i) const {
    return {particles.data() + static_cast<std::ptrdiff_t>(i) * particles.cols(),
            static_cast<std::size_t>(particles.cols())};
  }
};

/// y tilde_i = base_obs + perturbations.row(i).
struct PerturbedObs {
  Vector base_obs;
  ParticleMatrix perturbations;  // P x m

  int size() const { return static_cast<int>(perturbations.rows()); }
};

/// Scalar quantity of interest evaluated on one particle.
struct Qoi {
  std::string name;
  std::function<double(std::span<const double>)> eval;

  static Qoi component(int k);
  static Qoi identity() { return component(0); }
};

/// P i.i.d. draws from the model's initial law.
EnsembleState draw_initial_ensemble(const ModelSpec& model, int particles, RandomStream& stream);

/// P i.i.d. N(0, Gamma) rows added to y.
PerturbedObs draw_perturbed_obs(const Vector& y, const Matrix& gamma_chol, int particles, RandomStream& stream);

/// Propagates every particle over one observation interval with its own noise path.
EnsembleState predict_ensemble(const EnsembleState& ens, const ModelSpec& model, std::span<const NoisePath> noise);

Matrix sample_cov(const EnsembleState& ens, CovDivisor divisor);

/// K = C H^T (H C H^T + Gamma)^-1 via a Cholesky solve of the innovation matrix.
Matrix kalman_gain(const Matrix& cov, const Matrix& obs_operator, const Matrix& obs_noise_cov);

/// v_hat_i = (I - K H) v_i + K y_tilde_i.
EnsembleState update_ensemble(const EnsembleState& ens, const Matrix& gain, const Matrix& obs_operator,
                              const PerturbedObs& pobs);

/// (1/P) sum_i phi(v_hat_i).
double estimate_qoi(const EnsembleState& ens, const Qoi& qoi);

/// Allocation-light building blocks shared with the coupled samplers.
namespace detail {

/// In-place update of rows [0, count) of `particles` using perturbation rows
/// [first_row, first_row + count).
void apply_update(ParticleMatrix& particles, const Matrix& gain, const Matrix& obs_operator,
                  const PerturbedObs& pobs, int first_row);

}  // namespace detail

}  // namespace mienkf
