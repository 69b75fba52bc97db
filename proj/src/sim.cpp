#include "padfall/sim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace padfall {

namespace {

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) {
    throw StateCorruptionError(fmt::format("non-finite {}: ({}, {}, {})", what, v.x(), v.y(), v.z()));
  }
}

// Body z-axis expressed in the world frame for ZYX (yaw, pitch, roll) Euler angles.
Vec3 body_z_axis(const Vec3& attitude) {
  const double cr = std::cos(attitude.x()), sr = std::sin(attitude.x());
  const double cp = std::cos(attitude.y()), sp = std::sin(attitude.y());
  const double cy = std::cos(attitude.z()), sy = std::sin(attitude.z());
  return {cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr};
}

}  // namespace

void DroneParams::validate(double gravity) const {
  if (!(mass > 0.0)) throw ConfigError("drone.mass must be > 0");
  if (!((inertia_diag.array() > 0.0).all())) throw ConfigError("drone.inertia components must be > 0");
  if (!(max_total_thrust > mass * gravity)) {
    throw ConfigError(fmt::format("drone.max_total_thrust ({}) must exceed hover thrust ({})", max_total_thrust,
                                  mass * gravity));
  }
  if (!(attitude_time_constant > 0.0)) throw ConfigError("drone.attitude_time_constant must be > 0");
  if (!(max_tilt > 0.0 && max_tilt < kPi / 2)) throw ConfigError("drone.max_tilt must be in (0, pi/2)");
  if (!pid.kp.allFinite() || !pid.ki.allFinite() || !pid.kd.allFinite() || !std::isfinite(pid.integrator_limit)) {
    throw ConfigError("drone PID gains must be finite");
  }
  if (!linear_drag_coeff.allFinite() || (linear_drag_coeff.array() < 0.0).any()) {
    throw ConfigError("drone.linear_drag must be finite and >= 0");
  }
}

int SimConfig::substeps() const { return static_cast<int>(std::lround(control_period / physics_dt)); }

void SimConfig::validate() const {
  if (!(physics_dt > 0.0)) throw ConfigError("sim.physics_dt must be > 0");
  if (!(control_period > 0.0)) throw ConfigError("sim.control_period must be > 0");
  const double ratio = control_period / physics_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
    throw ConfigError("sim.control_period must be an integer multiple of sim.physics_dt");
  }
  if (!(world_bounds.max.array() > world_bounds.min.array()).all()) {
    throw ConfigError("sim.world_min must be strictly below sim.world_max");
  }
}

double wrap_angle(double angle) {
  double r = std::fmod(angle + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r - kPi;
}

PidOutput pid_position_step(const DroneState& state, const Vec3& setpoint, const DroneParams& params,
                            double gravity, double dt, const PidMemory& memory) {
  const PidGains& g = params.pid;
  const Vec3 error = setpoint - state.position;

  PidOutput out;
  out.memory.integral =
      (memory.integral + error * dt).cwiseMax(-g.integrator_limit).cwiseMin(g.integrator_limit);

  // Derivative acts on the measured velocity so setpoint jumps do not kick.
  const Vec3 force =
      g.kp.cwiseProduct(error) + g.ki.cwiseProduct(out.memory.integral) - g.kd.cwiseProduct(state.velocity);

  const double weight = params.mass * gravity;
  const double yaw = state.attitude.z();
  const double fx_heading = std::cos(yaw) * force.x() + std::sin(yaw) * force.y();
  const double fy_heading = -std::sin(yaw) * force.x() + std::cos(yaw) * force.y();
  const double tilt_scale = weight > 0.0 ? weight : params.mass * 9.81;
  out.attitude = Vec3(std::clamp(-fy_heading / tilt_scale, -params.max_tilt, params.max_tilt),
                      std::clamp(fx_heading / tilt_scale, -params.max_tilt, params.max_tilt), 0.0);

  const double tilt_cos = std::max(std::cos(state.attitude.x()) * std::cos(state.attitude.y()), 0.5);
  out.thrust = std::clamp((weight + force.z()) / tilt_cos, 0.0, params.max_total_thrust);
  return out;
}

VehicleState step_physics(const VehicleState& state, const Vec3& commanded_setpoint, const Vec3& external_force,
                          const DroneParams& params, const SimConfig& cfg, const SurfaceContact& surface) {
  const DroneState& s = state.drone;
  require_finite(s.position, "position");
  require_finite(s.velocity, "velocity");
  require_finite(s.attitude, "attitude");
  require_finite(s.angular_velocity, "angular velocity");
  require_finite(commanded_setpoint, "setpoint");
  require_finite(external_force, "external force");

  const double dt = cfg.physics_dt;
  const Vec3 setpoint = cfg.world_bounds.clamp(commanded_setpoint);
  const PidOutput cmd = pid_position_step(s, setpoint, params, cfg.gravity, dt, state.pid);

  VehicleState next;
  next.pid = cmd.memory;
  DroneState& n = next.drone;

  if (params.attitude_loop) {
    Vec3 rate;
    for (int i = 0; i < 3; ++i) {
      rate[i] = wrap_angle(cmd.attitude[i] - s.attitude[i]) / params.attitude_time_constant;
      n.attitude[i] = wrap_angle(s.attitude[i] + rate[i] * dt);
    }
    n.angular_velocity = rate;
  } else {
    n.attitude = s.attitude;
    n.angular_velocity = Vec3::Zero();
  }

  double thrust = cmd.thrust;
  const GroundEffect& ge = cfg.ground_effect;
  if (ge.enabled && std::isfinite(surface.surface_height)) {
    const double h = s.position.z() - surface.surface_height;
    if (h >= 0.0 && h < ge.height) {
      const double ratio = ge.rotor_radius / (4.0 * std::max(h, ge.rotor_radius / 4.0));
      thrust *= 1.0 + ge.coeff * ratio * ratio;
    }
  }

  const Vec3 thrust_world = thrust * body_z_axis(n.attitude);
  const Vec3 drag = params.linear_drag_coeff.cwiseProduct(s.velocity);
  const Vec3 accel = (thrust_world + external_force - drag) / params.mass - Vec3(0.0, 0.0, cfg.gravity);

  n.velocity = s.velocity + accel * dt;
  n.position = s.position + n.velocity * dt;
  return next;
}

}  // namespace padfall
