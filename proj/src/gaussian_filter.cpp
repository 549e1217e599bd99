#include "mienkf/gaussian_filter.hpp"

#include "mienkf/enkf.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace mienkf {

LinearTransition exact_transition(const ModelSpec& model, double interval) {
  if (model.kind != ModelKind::OrnsteinUhlenbeck)
    throw UnsupportedModelError("exact Kalman prediction needs linear (OU) dynamics");
  const int d = model.state_dim;
  if (interval == 0.0) return {Matrix::Identity(d, d), Matrix::Zero(d, d)};
  if (interval < 0.0) throw ArgumentError("interval must be non-negative");

  const Matrix drift = -Matrix::Identity(d, d);
  const Matrix diffusion = model.sigma * model.sigma * Matrix::Identity(d, d);

  // Van Loan: exp([[-A, BB^T], [0, A^T]] t) = [[., F^-1 Q], [0, F^T]].
  Matrix block = Matrix::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = -drift * interval;
  block.topRightCorner(d, d) = diffusion * interval;
  block.bottomRightCorner(d, d) = drift.transpose() * interval;
  const Matrix e = block.exp();
  const Matrix f = e.bottomRightCorner(d, d).transpose();
  Matrix q = f * e.topRightCorner(d, d);
  q = 0.5 * (q + q.transpose()).eval();
  return {f, q};
}

GaussianBelief kf_predict(const GaussianBelief& belief, const ModelSpec& model) {
  return kf_predict(belief, model, model.obs_interval);
}

GaussianBelief kf_predict(const GaussianBelief& belief, const ModelSpec& model, double interval) {
  const auto [f, q] = exact_transition(model, interval);
  GaussianBelief next;
  next.mean = f * belief.mean;
  next.cov = f * belief.cov * f.transpose() + q;
  next.time_index = belief.time_index + (interval > 0.0 ? 1 : 0);
  return next;
}

GaussianBelief kf_update(const GaussianBelief& belief, const Vector& y, const Matrix& obs_operator,
                         const Matrix& obs_noise_cov) {
  if (y.size() != obs_operator.rows() || obs_operator.cols() != belief.mean.size())
    throw ArgumentError("observation dimensions do not match the belief");
  const Matrix gain = kalman_gain(belief.cov, obs_operator, obs_noise_cov);
  GaussianBelief post;
  post.time_index = belief.time_index;
  post.mean = belief.mean + gain * (y - obs_operator * belief.mean);
  const Matrix id = Matrix::Identity(belief.cov.rows(), belief.cov.cols());
  post.cov = (id - gain * obs_operator) * belief.cov;
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

std::vector<GaussianBelief> kalman_reference(const ModelSpec& model, const ObservationSequence& data) {
  std::vector<GaussianBelief> out;
  out.reserve(static_cast<std::size_t>(data.horizon) + 1);
  GaussianBelief belief{model.init_mean, model.init_cov, 0};
  out.push_back(belief);
  for (int n = 1; n <= data.horizon; ++n) {
    belief = kf_predict(belief, model);
    belief = kf_update(belief, data.obs[static_cast<std::size_t>(n)], model.obs_operator, model.obs_noise_cov);
    out.push_back(belief);
  }
  return out;
}

}  // namespace mienkf
