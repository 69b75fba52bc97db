#pragma once

#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "padfall/common.hpp"
#include "padfall/platform.hpp"
#include "padfall/reward.hpp"
#include "padfall/sim.hpp"
#include "padfall/trajectory.hpp"
#include "padfall/wind.hpp"

namespace padfall {

inline constexpr int kObservationDim = 15;
inline constexpr int kActionDim = 3;

using ObservationVector = Eigen::Matrix<double, kObservationDim, 1>;

/// Agent input: attitude, velocity, body rates, offset to the pad, and pad
/// velocity relative to the drone.
struct Observation {
  Vec3 theta = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 d = Vec3::Zero();
  Vec3 delta_v = Vec3::Zero();

  ObservationVector flat() const;
  static Observation from_flat(const ObservationVector& x);
  bool operator==(const Observation&) const = default;
};

struct NormalizationRanges {
  double theta = kPi;
  double v_xy = 3.0;
  double v_z = 2.0;
  double omega = 2.0 * kPi;
  double d = 2.0;
  double delta_v = 3.46;

  ObservationVector bounds() const;
  void validate() const;
};

struct Action {
  Vec3 c = Vec3::Zero();

  Action clamped() const { return {c.cwiseMax(-1.0).cwiseMin(1.0)}; }
};

enum class Outcome { kInProgress, kLanded, kOutOfBounds, kBelowPadFloor, kTimeout };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& name);

struct EpisodeConfig {
  double max_duration = 20.0;
  /// Spawn box relative to the pad's position at t = 0.
  Box spawn_region{Vec3(-1.0, -1.0, 0.5), Vec3(1.0, 1.0, 1.5)};
  double success_xy_tolerance = 0.25;
  double touchdown_height = 0.01;
  double max_touchdown_speed = 0.5;
  double out_of_bounds_distance = 4.0;
  double below_floor_margin = 0.05;
  double action_scale = 0.1;
  /// Snap each action component to {-1, 0, 1} before use.
  bool ternary_actions = false;

  void validate(double pad_half_extent) const;
};

/// Static settings shared by every episode of an environment.
struct EnvSettings {
  SimConfig sim;
  DroneParams drone;
  EpisodeConfig episode;
  RewardParams reward;
  NormalizationRanges ranges;
  /// Steps whose mean applied force exceeds this magnitude count as wind-active, N.
  double wind_active_threshold = 1e-3;

  void validate() const;
  int max_steps() const;
};

/// One evaluation or training scenario.
struct ScenarioSpec {
  std::string name = "SPL";
  TrajectorySpec trajectory;
  std::optional<ImpellerSpec> impeller;
  GustConfig gusts{0.0, 0.2, 0.005};
  int episodes = 15;
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct StepInfo {
  double distance = 0.0;             ///< |pad - drone|, m
  double horizontal_distance = 0.0;  ///< m
  double relative_speed = 0.0;       ///< |v_drone - v_pad|, m/s
  Vec3 setpoint = Vec3::Zero();
  Vec3 action = Vec3::Zero();
  Vec3 applied_force = Vec3::Zero();  ///< mean over the decision's substeps, N
  Vec3 gust_force = Vec3::Zero();
  bool wind_active = false;
  Vec3 impeller_position = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Observation raw_observation;
};

struct StepResult {
  Observation observation;  ///< normalized
  double reward = 0.0;
  bool terminated = false;
  Outcome outcome = Outcome::kInProgress;
  StepInfo info;
};

/// Full mutable state of one rollout. Copying it forks the episode.
struct EpisodeState {
  ScenarioSpec scenario;
  Trajectory trajectory;
  VehicleState vehicle;
  PadState pad;
  RngStream wind_rng;
  WindSchedule wind;
  int step = 0;
  double previous_distance = 0.0;
  Outcome outcome = Outcome::kInProgress;

  double time(const SimConfig& sim) const { return step * sim.control_period; }
  bool terminated() const { return outcome != Outcome::kInProgress; }
};

Observation build_observation(const DroneState& drone, const PadState& pad);

Observation normalize_observation(const Observation& raw, const NormalizationRanges& ranges);

/// setpoint = position + scale * c, clamped to the world bounds.
Vec3 apply_action(const DroneState& drone, const Action& action, double scale, const Box& world_bounds);

std::pair<EpisodeState, Observation> reset_env(const EnvSettings& settings, const ScenarioSpec& scenario,
                                               std::uint64_t master_seed, std::uint64_t episode_index);

/// Throws UsageError if the episode already terminated.
StepResult step_env(const EnvSettings& settings, EpisodeState& state, const Action& action);

/// Same as step_env but with an explicit position setpoint (scripted
/// controllers). The setpoint is only clamped to the world bounds.
StepResult step_env_setpoint(const EnvSettings& settings, EpisodeState& state, const Vec3& setpoint);

/// Starts an episode from a given vehicle state instead of a random spawn.
std::pair<EpisodeState, Observation> reset_env_at(const EnvSettings& settings, const ScenarioSpec& scenario,
                                                  std::uint64_t master_seed, std::uint64_t episode_index,
                                                  const DroneState& drone);

}  // namespace padfall
