#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace padfall {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

// Error families. Each maps to one failure class named in the interfaces:
// corrupted numeric state, bad configuration, misuse of an API, and
// numerical breakdown of a filter or learner.
struct StateCorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

struct SingularInputError : std::domain_error {
  using std::domain_error::domain_error;
};

struct FilterDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p, double slack = 0.0) const {
    return (p.array() >= min.array() - slack).all() && (p.array() <= max.array() + slack).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(min).cwiseMin(max); }
  Vec3 center() const { return 0.5 * (min + max); }
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

/// Seeded random stream. Every stochastic draw in the library goes through
/// one of these; streams are derived from (seed, index, purpose) so that
/// parallel rollouts never share state.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static RngStream derive(std::uint64_t master, std::uint64_t index, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(purpose), 0x9e3779b9u};
    RngStream s;
    s.engine_.seed(seq);
    return s;
  }

  /// u ~ Uniform[0, 1)
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean, double stddev) { return normal_(engine_) * stddev + mean; }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const RngStream& a, const RngStream& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Purpose tags for derived streams.
enum class StreamPurpose : std::uint64_t {
  kSpawn = 1,
  kWind = 2,
  kTrajectory = 3,
  kExploration = 4,
  kReplay = 5,
  kInit = 6,
  kTargetNoise = 7,
};

inline RngStream derive_stream(std::uint64_t master, std::uint64_t index, StreamPurpose purpose) {
  return RngStream::derive(master, index, static_cast<std::uint64_t>(purpose));
}

/// 64-bit FNV-1a, used for config hashes in manifests.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace padfall
