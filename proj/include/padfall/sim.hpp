#pragma once

#include <limits>

#include "padfall/common.hpp"

namespace padfall {

/// Position-loop gains, per axis (x, y, z). Outputs are forces in N.
struct PidGains {
  Vec3 kp{2.7, 2.7, 2.7};
  Vec3 ki{0.2, 0.2, 0.4};
  Vec3 kd{0.378, 0.378, 0.378};
  /// Bound on the integrated position error, m·s.
  double integrator_limit = 0.5;
};

/// Rigid-body and inner-loop parameters of the simulated vehicle. The
/// defaults approximate a Crazyflie-class quadrotor; the gains were tuned
/// once against the step-response test and are not measured values.
struct DroneParams {
  double mass = 0.027;
  Vec3 inertia_diag{1.4e-5, 1.4e-5, 2.17e-5};
  double max_total_thrust = 0.60;
  Vec3 linear_drag_coeff{0.01, 0.01, 0.01};
  double attitude_time_constant = 0.04;
  double max_tilt = 0.35;
  bool attitude_loop = true;
  PidGains pid;

  /// Throws ConfigError when an invariant is violated.
  void validate(double gravity = 9.81) const;
};

struct DroneState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();  ///< roll, pitch, yaw in [-pi, pi]
  Vec3 angular_velocity = Vec3::Zero();

  bool operator==(const DroneState&) const = default;
};

/// Ground effect: thrust multiplier 1 + k * (r / 4h)^2 below `height` above the pad.
struct GroundEffect {
  bool enabled = false;
  double coeff = 0.5;
  double rotor_radius = 0.023;
  double height = 0.1;
};

struct SimConfig {
  double physics_dt = 1.0 / 240.0;
  double control_period = 1.0 / 30.0;
  double gravity = 9.81;
  Box world_bounds{Vec3(-6.0, -6.0, -1.0), Vec3(6.0, 6.0, 5.0)};
  GroundEffect ground_effect;

  /// Number of physics substeps per control decision.
  int substeps() const;
  void validate() const;
};

/// Integrator memory of the position loop.
struct PidMemory {
  Vec3 integral = Vec3::Zero();
  bool operator==(const PidMemory&) const = default;
};

struct PidOutput {
  double thrust = 0.0;            ///< N, saturated to [0, max_total_thrust]
  Vec3 attitude = Vec3::Zero();  ///< desired roll, pitch, yaw
  PidMemory memory;
};

/// Vehicle state plus the controller memory that travels with it.
struct VehicleState {
  DroneState drone;
  PidMemory pid;

  bool operator==(const VehicleState&) const = default;
};

/// Height of the pad surface under the drone, used by the ground-effect term.
/// Unset (NaN) when the drone is not above the pad.
struct SurfaceContact {
  double surface_height = std::numeric_limits<double>::quiet_NaN();
};

/// Wraps to [-pi, pi). An odd multiple of pi maps to -pi.
double wrap_angle(double angle);

PidOutput pid_position_step(const DroneState& state, const Vec3& setpoint, const DroneParams& params,
                            double gravity, double dt, const PidMemory& memory);

/// Advances by one physics_dt with semi-implicit Euler.
/// Throws StateCorruptionError on non-finite input.
VehicleState step_physics(const VehicleState& state, const Vec3& commanded_setpoint, const Vec3& external_force,
                          const DroneParams& params, const SimConfig& cfg, const SurfaceContact& surface = {});

}  // namespace padfall
