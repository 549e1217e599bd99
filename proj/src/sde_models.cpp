#include "mienkf/sde_models.hpp"

#include <cmath>
#include <numbers>

namespace mienkf {

namespace {

constexpr double kLipschitzLimit = 1e3;

void require_finite(std::span<const double> u) {
  for (double x : u) {
    if (!std::isfinite(x)) throw InvalidStateError("state vector has non-finite entries");
  }
}

[[noreturn]] void diverged(long step) {
  DivergenceSite site;
  site.step = step;
  throw DivergenceError(site);
}

template <class Gradient>
void gradient_flow(double& u, std::span<const double> dw, int steps, double dt, double sigma,
                   Gradient grad) {
  for (int k = 0; k < steps; ++k) {
    u = u - grad(u) * dt + sigma * dw[static_cast<std::size_t>(k)];
    if (!std::isfinite(u)) diverged(k);
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::OrnsteinUhlenbeck: return "ou";
    case ModelKind::DoubleWell: return "dw";
    case ModelKind::Langevin: return "langevin";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "ou") return ModelKind::OrnsteinUhlenbeck;
  if (name == "dw") return ModelKind::DoubleWell;
  if (name == "langevin") return ModelKind::Langevin;
  throw ArgumentError("unknown model '" + std::string(name) + "' (expected ou, dw or langevin)");
}

double ModelSpec::diffusion_const() const {
  if (kind == ModelKind::Langevin) return std::sqrt(2.0 * kappa * temperature);
  return sigma;
}

ModelSpec make_ou() {
  ModelSpec m;
  m.kind = ModelKind::OrnsteinUhlenbeck;
  m.state_dim = 1;
  m.sigma = 0.5;
  m.obs_operator = Matrix::Ones(1, 1);
  m.obs_noise_cov = Matrix::Constant(1, 1, 0.1);
  m.obs_interval = 1.0;
  m.init_mean = Vector::Zero(1);
  m.init_cov = Matrix::Constant(1, 1, 0.1);
  return m;
}

ModelSpec make_double_well() {
  ModelSpec m = make_ou();
  m.kind = ModelKind::DoubleWell;
  return m;
}

ModelSpec make_langevin(const Matrix& obs_operator) {
  ModelSpec m;
  m.kind = ModelKind::Langevin;
  m.state_dim = 2;
  m.sigma = 0.0;
  m.kappa = std::numbers::pi * std::numbers::pi / 32.0;
  m.temperature = 1.0;
  m.obs_operator = obs_operator;
  m.obs_noise_cov = 0.1 * Matrix::Identity(obs_operator.rows(), obs_operator.rows());
  m.obs_interval = 1.0;
  m.init_mean = Vector::Zero(2);
  m.init_cov = 0.1 * Matrix::Identity(2, 2);
  return m;
}

ModelSpec make_model(ModelKind kind) {
  switch (kind) {
    case ModelKind::OrnsteinUhlenbeck: return make_ou();
    case ModelKind::DoubleWell: return make_double_well();
    case ModelKind::Langevin: return make_langevin();
  }
  throw ArgumentError("unknown model kind");
}

double potential_gradient(ModelKind kind, double x) {
  switch (kind) {
    case ModelKind::OrnsteinUhlenbeck: return x;
    case ModelKind::DoubleWell:
    case ModelKind::Langevin: {
      const double s = 4.0 * x * x + 2.0;
      return 0.5 * x - 8.0 * x / (s * s);
    }
  }
  return 0.0;
}

Vector drift_eval(const ModelSpec& model, const Vector& u) {
  if (u.size() != model.state_dim) throw ArgumentError("state dimension mismatch in drift_eval");
  require_finite({u.data(), static_cast<std::size_t>(u.size())});
  Vector f(model.state_dim);
  if (model.kind == ModelKind::Langevin) {
    f(0) = u(1);
    f(1) = -potential_gradient(model.kind, u(0)) - model.kappa * u(1);
  } else {
    for (int i = 0; i < model.state_dim; ++i) f(i) = -potential_gradient(model.kind, u(i));
  }
  return f;
}

double drift_lipschitz_estimate(const ModelSpec& model, double radius, int points_per_dim) {
  if (points_per_dim < 2) throw ArgumentError("need at least two grid points per dimension");
  const int d = model.state_dim;
  const double h = 2.0 * radius / (points_per_dim - 1);
  long total = 1;
  for (int i = 0; i < d; ++i) total *= points_per_dim;

  auto point = [&](long flat) {
    Vector u(d);
    for (int i = 0; i < d; ++i) {
      u(i) = -radius + h * static_cast<double>(flat % points_per_dim);
      flat /= points_per_dim;
    }
    return u;
  };

  double worst = 0.0;
  for (long flat = 0; flat < total; ++flat) {
    const Vector u = point(flat);
    const Vector fu = drift_eval(model, u);
    // Neighbours along each axis.
    for (int axis = 0; axis < d; ++axis) {
      Vector v = u;
      v(axis) += h;
      if (v(axis) > radius + 1e-12) continue;
      const double slope = (drift_eval(model, v) - fu).norm() / h;
      worst = std::max(worst, slope);
    }
  }
  return worst;
}

void validate(const ModelSpec& model) {
  const int d = model.state_dim;
  if (d < 1) throw ArgumentError("state dimension must be positive");
  if (model.kind == ModelKind::Langevin && d != 2) throw ArgumentError("Langevin model is two-dimensional");
  if (model.kind != ModelKind::Langevin && d != 1) throw ArgumentError("OU and double-well models are scalar");
  if (!(model.obs_interval > 0.0)) throw ArgumentError("observation interval must be positive");
  if (model.obs_operator.cols() != d) throw ArgumentError("H must have d columns");
  const auto m = model.obs_operator.rows();
  if (m < 1 || m > d) throw ArgumentError("H must have between 1 and d rows");
  if (model.obs_noise_cov.rows() != m || model.obs_noise_cov.cols() != m)
    throw ArgumentError("Gamma must be m x m");
  if (!model.obs_noise_cov.isApprox(model.obs_noise_cov.transpose()))
    throw ArgumentError("Gamma must be symmetric");
  if (model.obs_noise_cov.llt().info() != Eigen::Success)
    throw ArgumentError("Gamma must be positive definite");
  if (model.init_mean.size() != d || model.init_cov.rows() != d || model.init_cov.cols() != d)
    throw ArgumentError("initial law has the wrong dimension");
  if (model.sigma < 0.0 || model.kappa < 0.0 || model.temperature < 0.0)
    throw ArgumentError("diffusion parameters must be non-negative");
  const double lip = drift_lipschitz_estimate(model, 5.0, d == 1 ? 401 : 41);
  if (!std::isfinite(lip) || lip > kLipschitzLimit)
    throw ArgumentError("drift is not Lipschitz on the test box");
}

NoisePath sample_noise(RandomStream& stream, int steps, int channels, double interval, int level) {
  if (steps < 1) throw ArgumentError("noise path needs at least one step");
  if (channels < 1) throw ArgumentError("noise path needs at least one channel");
  if (!(interval > 0.0)) throw ArgumentError("interval must be positive");
  NoisePath path;
  path.steps = steps;
  path.channels = channels;
  path.dt = interval / steps;
  path.level = level;
  path.increments.resize(static_cast<std::size_t>(steps) * channels);
  stream.fill_normal(path.increments, std::sqrt(path.dt));
  return path;
}

NoisePath coarsen_noise(const NoisePath& fine) {
  if (fine.steps % 2 != 0) throw ArgumentError("cannot coarsen a path with an odd number of steps");
  NoisePath coarse;
  coarse.steps = fine.steps / 2;
  coarse.channels = fine.channels;
  coarse.dt = 2.0 * fine.dt;
  coarse.level = fine.level - 1;
  coarse.increments.resize(static_cast<std::size_t>(coarse.steps) * coarse.channels);
  for (int k = 0; k < coarse.steps; ++k) {
    for (int c = 0; c < coarse.channels; ++c) {
      coarse.increments[static_cast<std::size_t>(k * coarse.channels + c)] =
          fine.at(2 * k, c) + fine.at(2 * k + 1, c);
    }
  }
  return coarse;
}

void propagate_in_place(const ModelSpec& model, std::span<double> state,
                        std::span<const double> increments, int steps, double dt) {
  switch (model.kind) {
    case ModelKind::OrnsteinUhlenbeck:
      gradient_flow(state[0], increments, steps, dt, model.sigma, [](double x) { return x; });
      break;
    case ModelKind::DoubleWell:
      gradient_flow(state[0], increments, steps, dt, model.sigma, [](double x) {
        const double s = 4.0 * x * x + 2.0;
        return 0.5 * x - 8.0 * x / (s * s);
      });
      break;
    case ModelKind::Langevin: {
      double x = state[0];
      double v = state[1];
      const double noise = model.diffusion_const();
      for (int k = 0; k < steps; ++k) {
        v += (-potential_gradient(ModelKind::Langevin, x) - model.kappa * v) * dt +
             noise * increments[static_cast<std::size_t>(k)];
        x += v * dt;
        if (!std::isfinite(x) || !std::isfinite(v)) diverged(k);
      }
      state[0] = x;
      state[1] = v;
      break;
    }
  }
}

Vector propagate(const ModelSpec& model, const Vector& u0, const NoisePath& noise) {
  if (u0.size() != model.state_dim) throw ArgumentError("state dimension mismatch in propagate");
  if (noise.channels != model.noise_channels()) throw ArgumentError("noise channel count mismatch");
  if (noise.steps < 1 || noise.increments.size() != static_cast<std::size_t>(noise.steps * noise.channels))
    throw ArgumentError("malformed noise path");
  require_finite({u0.data(), static_cast<std::size_t>(u0.size())});
  Vector u = u0;
  propagate_in_place(model, {u.data(), static_cast<std::size_t>(u.size())}, noise.increments, noise.steps,
                     noise.dt);
  return u;
}

}  // namespace mienkf
