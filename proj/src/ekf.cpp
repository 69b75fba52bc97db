#include "padfall/ekf.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace padfall {

void EkfState::validate() const {
  if (!x.allFinite() || !P.allFinite()) throw StateCorruptionError("ekf state is not finite");
  if ((process_variance.array() < 0.0).any()) throw ConfigError("ekf process variance must be >= 0");
  if ((measurement_variance.array() < 0.0).any()) throw ConfigError("ekf measurement variance must be >= 0");
}

Mat6 EkfModel::A() const {
  Mat6 a = Mat6::Identity();
  a.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity() * dt_factor;
  return a;
}

Mat36 EkfModel::H() {
  Mat36 h = Mat36::Zero();
  h.leftCols<3>().setIdentity();
  return h;
}

EkfState ekf_init(const Vec3& position, const Vec3& velocity, double position_variance, double velocity_variance) {
  EkfState s;
  s.x << position, velocity;
  s.P.setZero();
  s.P.diagonal() << Vec3::Constant(position_variance), Vec3::Constant(velocity_variance);
  return s;
}

namespace {

Mat6 symmetrized(const Mat6& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

EkfState ekf_predict(const EkfState& state, const EkfModel& model) {
  const Mat6 a = model.A();
  EkfState out = state;
  out.x = a * state.x;
  Mat6 p = a * state.P * a.transpose();
  p.diagonal() += state.process_variance;
  out.P = symmetrized(p);
  return out;
}

EkfState ekf_update(const EkfState& state, const Vec3& measurement, const EkfModel& model) {
  if (!measurement.allFinite()) throw StateCorruptionError("ekf measurement is not finite");
  const Mat36 h = EkfModel::H();
  Eigen::Matrix3d s = h * state.P * h.transpose();
  s.diagonal() += state.measurement_variance;
  s = 0.5 * (s + s.transpose());
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0.0).any()) {
    throw FilterDivergenceError("innovation covariance is not positive definite");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 6, 3> k = ldlt.solve(h * state.P).transpose();
  EkfState out = state;
  out.last_innovation = measurement - h * state.x;
  out.x = state.x + k * out.last_innovation;
  out.P = symmetrized((Mat6::Identity() - k * h) * state.P);
  if (!out.x.allFinite() || !out.P.allFinite()) throw FilterDivergenceError("ekf update produced non-finite state");
  (void)model;
  return out;
}

void BaselineConfig::validate() const {
  for (double g : {kp, ki, kd, integrator_limit, lookahead_horizon, descend_trigger_radius}) {
    if (!std::isfinite(g)) throw ConfigError("baseline gains must be finite");
  }
  if (!(descent_rate > 0.0)) throw ConfigError("baseline.descent_rate must be > 0");
  if (!(envelope > 0.0)) throw ConfigError("baseline.envelope must be > 0");
  if (!(dt_factor > 0.0)) throw ConfigError("baseline.dt_factor must be > 0");
  if (!(q_pos >= 0.0 && q_vel >= 0.0 && r_meas >= 0.0)) throw ConfigError("baseline variances must be >= 0");
}

BaselineMemory baseline_memory_for(const DroneState& drone) {
  BaselineMemory m;
  m.hold_altitude = drone.position.z();
  m.last_setpoint_z = drone.position.z();
  return m;
}

Vec3 baseline_target(const EkfState& ekf, const BaselineConfig& cfg) {
  return ekf.x.head<3>() + ekf.x.tail<3>() * cfg.lookahead_horizon;
}

Vec3 baseline_action(const DroneState& drone, const EkfState& ekf, const BaselineConfig& cfg, double control_period,
                     BaselineMemory& memory) {
  const Vec3 target = baseline_target(ekf, cfg);
  Vec3 error = target - drone.position;
  error.z() = 0.0;

  memory.integral += error * control_period;
  memory.integral = memory.integral.cwiseMax(-cfg.integrator_limit).cwiseMin(cfg.integrator_limit);
  const Vec3 derivative = memory.has_previous ? Vec3((error - memory.previous_error) / control_period) : Vec3::Zero();
  memory.previous_error = error;
  memory.has_previous = true;

  Vec3 offset = cfg.kp * error + cfg.ki * memory.integral + cfg.kd * derivative;

  double z_setpoint;
  if (error.head<2>().norm() < cfg.descend_trigger_radius) {
    memory.descending = true;
    z_setpoint = memory.last_setpoint_z - cfg.descent_rate * control_period;
  } else {
    if (memory.descending) memory.hold_altitude = memory.last_setpoint_z;
    memory.descending = false;
    z_setpoint = memory.hold_altitude;
  }
  offset.z() = z_setpoint - drone.position.z();
  offset = offset.cwiseMax(-cfg.envelope).cwiseMin(cfg.envelope);
  const Vec3 setpoint = drone.position + offset;
  memory.last_setpoint_z = setpoint.z();
  return setpoint;
}

BaselineController::BaselineController(BaselineConfig cfg, double control_period)
    : cfg_(std::move(cfg)), period_(control_period) {
  cfg_.validate();
  model_.dt_factor = cfg_.dt_factor;
}

void BaselineController::reset(const DroneState& drone, const Vec3& pad_measurement) {
  ekf_ = ekf_init(pad_measurement, Vec3::Zero());
  ekf_.process_variance << Vec3::Constant(cfg_.q_pos), Vec3::Constant(cfg_.q_vel);
  ekf_.measurement_variance = Vec3::Constant(cfg_.r_meas);
  memory_ = baseline_memory_for(drone);
}

Vec3 BaselineController::act(const DroneState& drone, const Vec3& pad_measurement) {
  ekf_ = ekf_update(ekf_predict(ekf_, model_), pad_measurement, model_);
  return baseline_action(drone, ekf_, cfg_, period_, memory_);
}

}  // namespace padfall
