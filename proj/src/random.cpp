#include "mienkf/random.hpp"

#include "mienkf/types.hpp"

#include <array>
#include <sstream>

namespace mienkf {

namespace {

/// splitmix64 finalizer; chained over the key words to get one engine seed.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t key_hash(const StreamKey& key) {
  const std::array<std::uint64_t, 7> words{key.seed,
                                           static_cast<std::uint64_t>(key.purpose) |
                                               (static_cast<std::uint64_t>(key.family) << 32),
                                           key.run,
                                           (static_cast<std::uint64_t>(key.level1) << 32) | key.level2,
                                           key.sample,
                                           key.time,
                                           0x6d69656e6b66ull};
  std::uint64_t h = 0;
  for (std::uint64_t w : words) h = mix(h ^ mix(w));
  return h;
}

}  // namespace

RandomStream::RandomStream(const StreamKey& key) : engine_(key_hash(key)) {}

void RandomStream::fill_normal(std::span<double> out, double scale) {
  for (double& x : out) x = scale * normal_(engine_);
}

DivergenceError::DivergenceError(DivergenceSite site)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "trajectory diverged";
        if (site.step >= 0) os << " at step " << site.step;
        if (site.particle >= 0) os << ", particle " << site.particle;
        if (!site.member.empty()) os << ", sub-ensemble " << site.member;
        if (site.level1 >= 0) os << ", index (" << site.level1 << "," << site.level2 << ")";
        if (site.sample >= 0) os << ", sample " << site.sample;
        if (site.time >= 0) os << ", observation time " << site.time;
        return os.str();
      }()),
      site_(std::move(site)) {}

}  // namespace mienkf
