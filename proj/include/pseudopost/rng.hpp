#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace pseudopost {

// splitmix64 step; also used stand-alone as a 64-bit mixer.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64(std::uint64_t x) { return splitmix64_next(x); }

// Folds one key component into a running hash.
inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Counter-keyed random stream (xoshiro256++ seeded from a hashed key).
//
// Substreams derived from distinct (master, domain, index, member) keys are
// independent for all practical purposes. Every simulation task owns its key,
// so results never depend on thread schedule or call interleaving.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) {
    std::uint64_t x = key;
    bool all_zero = true;
    for (auto& s : state_) {
      s = splitmix64_next(x);
      all_zero = all_zero && s == 0;
    }
    if (all_zero) state_[0] = 0x1ULL;
  }

  static RngStream substream(std::uint64_t master, std::uint64_t domain,
                             std::uint64_t index = 0, std::uint64_t member = 0) {
    return RngStream(mix_key(mix_key(mix_key(master, domain), index), member));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// A keyed family of substreams: stream(m) is the member-m stream of
// (master, domain, index). Used to hand one independent stream to each
// simulated pair, batch, replication or grid point.
struct StreamFamily {
  std::uint64_t master = 0;
  std::uint64_t domain = 0;
  std::uint64_t index = 0;

  RngStream stream(std::uint64_t member = 0) const {
    return RngStream::substream(master, domain, index, member);
  }
};

// Domain tags keeping substream families disjoint across subsystems.
namespace stream_domain {
inline constexpr std::uint64_t kPrior = 0x01;
inline constexpr std::uint64_t kBatch = 0x02;
inline constexpr std::uint64_t kScan = 0x03;
inline constexpr std::uint64_t kPilot = 0x04;
inline constexpr std::uint64_t kMcmc = 0x05;
inline constexpr std::uint64_t kWeightMc = 0x06;
inline constexpr std::uint64_t kObserved = 0x07;
inline constexpr std::uint64_t kExperiment = 0x08;
}  // namespace stream_domain

}  // namespace pseudopost
