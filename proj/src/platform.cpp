#include "padfall/platform.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "padfall/trajectory.hpp"

namespace padfall {

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kStatic:
      return "static";
    case TrajectoryKind::kLinear:
      return "linear";
    case TrajectoryKind::kCurved:
      return "curved";
    case TrajectoryKind::kComplex3d:
      return "complex3d";
  }
  throw ConfigError("unknown trajectory kind");
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "static") return TrajectoryKind::kStatic;
  if (name == "linear") return TrajectoryKind::kLinear;
  if (name == "curved") return TrajectoryKind::kCurved;
  if (name == "complex3d") return TrajectoryKind::kComplex3d;
  throw ConfigError(fmt::format("unknown trajectory kind '{}' (expected static, linear, curved, complex3d)", name));
}

void TrajectorySpec::validate() const {
  const int k = static_cast<int>(kind);
  if (k < 0 || k > 3) throw ConfigError("unknown trajectory kind");
  if (!(speed >= 0.0 && speed <= kMaxPadSpeed)) {
    throw ConfigError(fmt::format("trajectory speed {} outside [0, {}]", speed, kMaxPadSpeed));
  }
  if (!(direction_change_interval > 0.0)) throw ConfigError("direction_change_interval must be > 0");
  if (!(half_extent > 0.0)) throw ConfigError("pad half_extent must be > 0");
  if (!(curvature_max >= curvature_min && curvature_min > 0.0)) {
    throw ConfigError("curvature range must satisfy 0 < min <= max");
  }
  if (!waypoint_region.contains(origin)) throw ConfigError("trajectory origin must lie inside waypoint_region");
  if (kind == TrajectoryKind::kComplex3d) {
    if (!(z_period > 0.0) || !(z_amplitude >= 0.0)) throw ConfigError("complex3d z profile must be non-negative");
    if (z_amplitude * 2.0 * kPi / z_period > speed) {
      throw ConfigError("complex3d vertical speed amplitude exceeds trajectory speed");
    }
    if (origin.z() - z_amplitude < waypoint_region.min.z() || origin.z() + z_amplitude > waypoint_region.max.z()) {
      throw ConfigError("complex3d z oscillation leaves waypoint_region");
    }
  }
}

Trajectory::Trajectory(const TrajectorySpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == TrajectoryKind::kComplex3d) {
    const double vz_peak = spec_.z_amplitude * 2.0 * kPi / spec_.z_period;
    horizontal_speed_ = std::sqrt(std::max(0.0, spec_.speed * spec_.speed - vz_peak * vz_peak));
  } else {
    horizontal_speed_ = spec_.speed;
  }
}

namespace {

constexpr int kHeadingTrials = 48;
constexpr int kContainmentSamples = 32;
constexpr double kRegionMargin = 0.01;

}  // namespace

Trajectory::Sample Trajectory::evaluate(const Segment& seg, double tau) const {
  Sample s;
  if (seg.resting || horizontal_speed_ == 0.0) {
    s.xy = seg.start;
    return s;
  }
  const double v = horizontal_speed_;
  const double omega = seg.curvature * v;
  if (omega == 0.0) {
    const Eigen::Vector2d u(std::cos(seg.heading), std::sin(seg.heading));
    s.xy = seg.start + u * v * tau;
    s.vxy = u * v;
    return s;
  }
  const double a = seg.heading + omega * tau;
  const double rho = v / omega;
  s.xy = seg.start + rho * Eigen::Vector2d(std::sin(a) - std::sin(seg.heading), -(std::cos(a) - std::cos(seg.heading)));
  s.vxy = v * Eigen::Vector2d(std::cos(a), std::sin(a));
  return s;
}

bool Trajectory::segment_inside(const Segment& seg) const {
  const Eigen::Vector2d lo = spec_.waypoint_region.min.head<2>().array() + kRegionMargin;
  const Eigen::Vector2d hi = spec_.waypoint_region.max.head<2>().array() - kRegionMargin;
  const int samples = seg.curvature == 0.0 ? 1 : kContainmentSamples;
  for (int j = 1; j <= samples; ++j) {
    const Eigen::Vector2d p = evaluate(seg, spec_.direction_change_interval * j / samples).xy;
    if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) return false;
  }
  return true;
}

void Trajectory::extend_to(std::size_t index) {
  while (segments_.size() <= index) {
    const std::size_t k = segments_.size();
    Segment seg;
    seg.start = k == 0 ? Eigen::Vector2d(spec_.origin.head<2>())
                       : evaluate(segments_.back(), spec_.direction_change_interval).xy;
    RngStream rng = RngStream::derive(spec_.seed, k, static_cast<std::uint64_t>(StreamPurpose::kTrajectory));
    seg.resting = true;
    for (int trial = 0; trial < kHeadingTrials; ++trial) {
      Segment cand = seg;
      cand.resting = false;
      cand.heading = rng.uniform(-kPi, kPi);
      if (spec_.kind == TrajectoryKind::kCurved || spec_.kind == TrajectoryKind::kComplex3d) {
        const double mag = rng.uniform(spec_.curvature_min, spec_.curvature_max);
        cand.curvature = rng.uniform() < 0.5 ? -mag : mag;
      }
      if (segment_inside(cand)) {
        seg = cand;
        break;
      }
    }
    segments_.push_back(seg);
  }
}

PadState Trajectory::at(double t) {
  if (!(t >= 0.0)) throw UsageError(fmt::format("pad_state_at requires t >= 0 (got {})", t));
  PadState pad;
  pad.half_extent = spec_.half_extent;
  pad.position = spec_.origin;
  if (spec_.kind == TrajectoryKind::kStatic) return pad;

  const double interval = spec_.direction_change_interval;
  const auto k = static_cast<std::size_t>(std::floor(t / interval));
  extend_to(k);
  const Sample s = evaluate(segments_[k], t - static_cast<double>(k) * interval);
  pad.position.head<2>() = s.xy;
  pad.velocity.head<2>() = s.vxy;

  if (spec_.kind == TrajectoryKind::kComplex3d) {
    const double w = 2.0 * kPi / spec_.z_period;
    pad.position.z() = spec_.origin.z() + spec_.z_amplitude * std::sin(w * t);
    pad.velocity.z() = spec_.z_amplitude * w * std::cos(w * t);
  }
  return pad;
}

PadState pad_state_at(const TrajectorySpec& spec, double t) {
  Trajectory traj(spec);
  return traj.at(t);
}

PadFrameOffset pad_frame_offset(const Vec3& drone_position, const PadState& pad) {
  return {pad.position - drone_position};
}

bool over_pad(const Vec3& drone_position, const PadState& pad) {
  return std::abs(drone_position.x() - pad.position.x()) <= pad.half_extent &&
         std::abs(drone_position.y() - pad.position.y()) <= pad.half_extent;
}

}  // namespace padfall
