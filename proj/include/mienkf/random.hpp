#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <span>

namespace mienkf {

/// What a stream is used for. Part of the stream identity, so two purposes
/// never share draws even when all other key fields coincide.
enum class StreamPurpose : std::uint32_t {
  Initial = 1,
  Dynamics = 2,
  Perturbation = 3,
  Truth = 4,
  Observation = 5,
  Auxiliary = 6,
};

/// Identity of a random stream. Every independent object in an experiment
/// (a run, a coupled sample, an observation time) gets its own key, which makes
/// results independent of how work is scheduled across threads.
struct StreamKey {
  std::uint64_t seed = 0;
  StreamPurpose purpose = StreamPurpose::Auxiliary;
  /// Separates estimator families that would otherwise reuse level/sample keys.
  std::uint32_t family = 0;
  std::uint64_t run = 0;
  std::uint32_t level1 = 0;
  std::uint32_t level2 = 0;
  std::uint64_t sample = 0;
  std::uint64_t time = 0;
};

class RandomStream {
 public:
  explicit RandomStream(const StreamKey& key);

  double normal() { return normal_(engine_); }
  void fill_normal(std::span<double> out, double scale = 1.0);
  double uniform() { return boost::random::uniform_01<double>()(engine_); }

  boost::random::mt19937_64& engine() { return engine_; }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

}  // namespace mienkf
