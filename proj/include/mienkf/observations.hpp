#pragma once

#include "mienkf/sde_models.hpp"

#include <cstdint>
#include <vector>

namespace mienkf {

/// One realised truth trajectory and its noisy observations at n = 0..horizon.
/// obs[0] is unused (no observation at the initial time) and kept empty.
struct ObservationSequence {
  std::vector<Vector> truth;
  std::vector<Vector> obs;
  Matrix obs_operator;
  Matrix obs_noise_cov;
  double obs_interval = 1.0;
  int horizon = 0;
  int truth_steps = 0;
  std::uint64_t seed = 0;
};

struct SynthesisOptions {
  int truth_steps = 256;
  /// Test mode: observe H * truth without noise.
  bool noiseless = false;
  std::uint64_t run = 0;
};

/// Simulates the truth with `truth_steps` steps per observation interval starting
/// from a draw of the initial law, and observes y_n = H u_n + eta_n with
/// eta_n ~ N(0, Gamma) for n = 1..horizon.
ObservationSequence synthesize_data(const ModelSpec& model, int horizon, std::uint64_t seed,
                                    const SynthesisOptions& options = {});

/// Lower Cholesky factor; throws NumericalError when `cov` is not positive definite.
Matrix cholesky_factor(const Matrix& cov);

}  // namespace mienkf
