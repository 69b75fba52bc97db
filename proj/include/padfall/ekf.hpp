#pragma once

#include <Eigen/Core>

#include "padfall/common.hpp"
#include "padfall/sim.hpp"

namespace padfall {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Constant-velocity pad estimate: position (m) then velocity (m/s).
struct EkfState {
  Vec6 x = Vec6::Zero();
  Mat6 P = Mat6::Identity();
  Vec6 process_variance = (Vec6() << 1e-6, 1e-6, 1e-6, 1e-4, 1e-4, 1e-4).finished();
  Vec3 measurement_variance = Vec3::Constant(1e-4);  ///< m^2 per axis
  Vec3 last_innovation = Vec3::Zero();

  void validate() const;
};

struct EkfModel {
  double dt_factor = 1.0 / 30.0;

  /// With dt_factor = 1 this is the unit-step constant-velocity matrix.
  Mat6 A() const;
  static Mat36 H();
};

EkfState ekf_init(const Vec3& position, const Vec3& velocity, double position_variance = 1e-2,
                  double velocity_variance = 1.0);

EkfState ekf_predict(const EkfState& state, const EkfModel& model);

/// Throws FilterDivergenceError if the innovation covariance cannot be inverted.
EkfState ekf_update(const EkfState& state, const Vec3& measurement, const EkfModel& model);

struct BaselineConfig {
  double kp = 1.0;
  double ki = 0.0;
  double kd = 0.0;
  double integrator_limit = 0.5;
  double lookahead_horizon = 0.5;       ///< s
  double descend_trigger_radius = 0.15;  ///< m
  double descent_rate = 0.3;            ///< m/s
  double envelope = 0.1;                ///< max setpoint offset per decision, m
  /// Used when the filter is built by BaselineController.
  double dt_factor = 1.0 / 30.0;
  double q_pos = 1e-6;
  double q_vel = 1e-4;
  double r_meas = 1e-4;

  void validate() const;
};

/// Pursuit memory carried between decisions.
struct BaselineMemory {
  Vec3 integral = Vec3::Zero();
  Vec3 previous_error = Vec3::Zero();
  bool has_previous = false;
  double hold_altitude = 0.0;
  double last_setpoint_z = 0.0;
  bool descending = false;
};

BaselineMemory baseline_memory_for(const DroneState& drone);

/// Pursuit target: filtered pad position led by velocity * lookahead.
Vec3 baseline_target(const EkfState& ekf, const BaselineConfig& cfg);

/// Horizontal PID toward the led target; altitude held until the horizontal
/// error drops below the trigger radius, then ramped down at descent_rate.
/// The offset from the current position is clamped to +-envelope per axis.
Vec3 baseline_action(const DroneState& drone, const EkfState& ekf, const BaselineConfig& cfg, double control_period,
                     BaselineMemory& memory);

/// Filter plus pursuit law, fed one pad position measurement per decision.
class BaselineController {
 public:
  BaselineController(BaselineConfig cfg, double control_period);

  void reset(const DroneState& drone, const Vec3& pad_measurement);
  Vec3 act(const DroneState& drone, const Vec3& pad_measurement);

  const EkfState& filter() const { return ekf_; }

 private:
  BaselineConfig cfg_;
  double period_;
  EkfModel model_;
  EkfState ekf_;
  BaselineMemory memory_;
};

}  // namespace padfall
