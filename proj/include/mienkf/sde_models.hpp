#pragma once

#include "mienkf/random.hpp"
#include "mienkf/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mienkf {

/// The three test dynamics. OU and DoubleWell are scalar gradient flows
/// du = -U'(u) dt + sigma dW; Langevin is the damped second-order system in
/// (X, V) driven by the double-well potential.
enum class ModelKind { OrnsteinUhlenbeck, DoubleWell, Langevin };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::OrnsteinUhlenbeck;
  int state_dim = 1;
  double sigma = 0.5;        // additive diffusion, OU and DoubleWell
  double kappa = 0.0;        // Langevin viscosity
  double temperature = 1.0;  // Langevin temperature
  Matrix obs_operator;       // H, m x d
  Matrix obs_noise_cov;      // Gamma, m x m
  double obs_interval = 1.0;
  Vector init_mean;
  Matrix init_cov;

  int obs_dim() const { return static_cast<int>(obs_operator.rows()); }
  /// Brownian channels driving the state (one for every model here).
  int noise_channels() const { return 1; }
  /// Multiplier of dW in the noisy component: sigma, or sqrt(2 kappa T) for Langevin.
  double diffusion_const() const;
};

/// OU with U(u) = u^2/2, sigma = 0.5, tau = 1, H = 1, Gamma = 0.1, u0 ~ N(0, Gamma).
ModelSpec make_ou();
/// Double well U(u) = u^2/4 + 1/(4u^2 + 2), otherwise as make_ou().
ModelSpec make_double_well();
/// Langevin dynamics on the double-well potential, kappa = pi^2/32, T = 1.
/// H defaults to observing the position only; Gamma = 0.1 I and
/// (X0, V0) ~ N(0, 0.1 I).
ModelSpec make_langevin(const Matrix& obs_operator = Matrix::Identity(1, 2));
ModelSpec make_model(ModelKind kind);

/// Checks the model invariants: Gamma SPD, tau > 0, H has at most d rows,
/// matching dimensions, and a bounded Lipschitz constant of the drift on a test box.
void validate(const ModelSpec& model);

/// Largest finite-difference slope |f(u) - f(v)| / |u - v| of the drift over a
/// uniform grid on [-radius, radius]^d.
double drift_lipschitz_estimate(const ModelSpec& model, double radius, int points_per_dim);

/// U'(x) for the model's potential.
double potential_gradient(ModelKind kind, double x);

Vector drift_eval(const ModelSpec& model, const Vector& u);

/// Brownian increments over one observation interval, stored step-major:
/// increment (k, c) lives at k * channels + c.
struct NoisePath {
  int steps = 0;
  int channels = 1;
  double dt = 0.0;
  int level = 0;
  std::vector<double> increments;

  double at(int step, int channel) const { return increments[static_cast<std::size_t>(step * channels + channel)]; }
};

NoisePath sample_noise(RandomStream& stream, int steps, int channels, double interval, int level = 0);

/// Pairwise sums of consecutive increments; the path a solver with half as
/// many steps sees when it shares the fine Brownian motion.
NoisePath coarsen_noise(const NoisePath& fine);

/// Advances u0 over one observation interval with noise.steps uniform steps.
/// OU and DoubleWell use the Milstein scheme, which for additive noise coincides
/// with Euler-Maruyama (the correction term carries the derivative of a constant
/// diffusion). Langevin uses symplectic Euler: velocity first, then position with
/// the updated velocity.
Vector propagate(const ModelSpec& model, const Vector& u0, const NoisePath& noise);

/// Allocation-free kernel behind propagate(). `state` holds one particle and is
/// updated in place; `increments` is step-major as in NoisePath.
void propagate_in_place(const ModelSpec& model, std::span<double> state,
                        std::span<const double> increments, int steps, double dt);

}  // namespace mienkf
