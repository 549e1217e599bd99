#pragma once

#include "mienkf/observations.hpp"
#include "mienkf/sde_models.hpp"

#include <vector>

namespace mienkf {

struct GaussianBelief {
  Vector mean;
  Matrix cov;
  int time_index = 0;
};

/// Exact one-interval transition of a linear SDE: u(tau) = A u(0) + xi, xi ~ N(0, Q).
struct LinearTransition {
  Matrix transition;
  Matrix noise_cov;
};

/// Transition moments of the continuous-time OU dynamics over `interval`,
/// from the matrix exponential of the Van Loan block matrix. Throws
/// UnsupportedModelError for nonlinear drifts.
LinearTransition exact_transition(const ModelSpec& model, double interval);

GaussianBelief kf_predict(const GaussianBelief& belief, const ModelSpec& model);
GaussianBelief kf_predict(const GaussianBelief& belief, const ModelSpec& model, double interval);

/// K = C H^T (H C H^T + Gamma)^-1; mean += K (y - H mean); cov = (I - K H) C,
/// symmetrised afterwards.
GaussianBelief kf_update(const GaussianBelief& belief, const Vector& y, const Matrix& obs_operator,
                         const Matrix& obs_noise_cov);

/// Filtering beliefs for n = 0..horizon. At n = 0 the belief is the initial law.
std::vector<GaussianBelief> kalman_reference(const ModelSpec& model, const ObservationSequence& data);

}  // namespace mienkf
