#pragma once

#include <cstdint>
#include <string>

#include "padfall/common.hpp"

namespace padfall {

/// Pad kinematics. `position` is the center of the top surface.
struct PadState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double half_extent = 0.25;

  bool operator==(const PadState&) const = default;
};

enum class TrajectoryKind { kStatic, kLinear, kCurved, kComplex3d };

std::string to_string(TrajectoryKind kind);
/// Throws ConfigError for unknown names.
TrajectoryKind trajectory_kind_from_string(const std::string& name);

/// Scripted pad motion. All kinds are pure functions of (spec, t).
///
/// linear:    constant-velocity segments; a new heading is drawn from the
///            seeded stream every `direction_change_interval` seconds.
/// curved:    constant-speed arcs whose signed curvature is drawn in
///            [curvature_min, curvature_max] per segment, same resampling.
/// complex3d: curved XY plus z = origin.z + amplitude * sin(2 pi t / period).
///            The horizontal speed is reduced so that |v| never exceeds `speed`.
///
/// Headings are rejection-sampled so every segment stays inside
/// `waypoint_region`; if no admissible heading is found the pad rests for
/// that segment.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  std::uint64_t seed = 0;
  Vec3 origin{0.0, 0.0, 0.5};
  double speed = 0.3;
  double direction_change_interval = 3.0;
  Box waypoint_region{Vec3(-1.5, -1.5, 0.2), Vec3(1.5, 1.5, 0.8)};
  double curvature_min = 0.3;
  double curvature_max = 1.5;
  double z_amplitude = 0.15;
  double z_period = 6.0;
  double half_extent = 0.25;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

inline constexpr double kMaxPadSpeed = 0.46;

/// Throws ConfigError for an unknown kind or invalid spec, UsageError for t < 0.
PadState pad_state_at(const TrajectorySpec& spec, double t);

struct PadFrameOffset {
  Vec3 d = Vec3::Zero();  ///< pad.position - drone_position
};

PadFrameOffset pad_frame_offset(const Vec3& drone_position, const PadState& pad);

/// Horizontal containment test against the square pad footprint.
bool over_pad(const Vec3& drone_position, const PadState& pad);

}  // namespace padfall
