#include "padfall/env.hpp"

#include <cmath>

#include <fmt/format.h>

namespace padfall {

ObservationVector Observation::flat() const {
  ObservationVector x;
  x << theta, v, omega, d, delta_v;
  return x;
}

Observation Observation::from_flat(const ObservationVector& x) {
  return {x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), x.segment<3>(9), x.segment<3>(12)};
}

ObservationVector NormalizationRanges::bounds() const {
  ObservationVector b;
  b << theta, theta, theta, v_xy, v_xy, v_z, omega, omega, omega, d, d, d, delta_v, delta_v, delta_v;
  return b;
}

void NormalizationRanges::validate() const {
  if (!(bounds().array() > 0.0).all() || !bounds().allFinite()) {
    throw ConfigError("observation clip bounds must be finite and > 0");
  }
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kInProgress:
      return "in_progress";
    case Outcome::kLanded:
      return "landed";
    case Outcome::kOutOfBounds:
      return "out_of_bounds";
    case Outcome::kBelowPadFloor:
      return "below_pad_floor";
    case Outcome::kTimeout:
      return "timeout";
  }
  return "unknown";
}

Outcome outcome_from_string(const std::string& name) {
  for (Outcome o : {Outcome::kInProgress, Outcome::kLanded, Outcome::kOutOfBounds, Outcome::kBelowPadFloor,
                    Outcome::kTimeout}) {
    if (to_string(o) == name) return o;
  }
  throw ConfigError(fmt::format("unknown outcome '{}'", name));
}

void EpisodeConfig::validate(double pad_half_extent) const {
  if (!(max_duration > 0.0)) throw ConfigError("episode.max_duration must be > 0");
  if (!(success_xy_tolerance > 0.0 && success_xy_tolerance <= pad_half_extent)) {
    throw ConfigError("episode.success_xy_tolerance must be in (0, pad half extent]");
  }
  if (!(touchdown_height > 0.0)) throw ConfigError("episode.touchdown_height must be > 0");
  if (!(max_touchdown_speed > 0.0)) throw ConfigError("episode.max_touchdown_speed must be > 0");
  if (!(out_of_bounds_distance > 0.0)) throw ConfigError("episode.out_of_bounds_distance must be > 0");
  if (!(action_scale > 0.0)) throw ConfigError("episode.action_scale must be > 0");
  if (!(spawn_region.max.array() >= spawn_region.min.array()).all()) {
    throw ConfigError("episode.spawn_min must not exceed episode.spawn_max");
  }
}

void EnvSettings::validate() const {
  sim.validate();
  drone.validate(sim.gravity);
  episode.validate(0.25);
  reward.validate();
  ranges.validate();
}

int EnvSettings::max_steps() const {
  return static_cast<int>(std::ceil(episode.max_duration / sim.control_period - 1e-9));
}

void ScenarioSpec::validate() const {
  trajectory.validate();
  gusts.validate();
  if (impeller) impeller->validate();
  if (episodes < 1) throw ConfigError(fmt::format("scenario {}: episodes must be >= 1", name));
}

Observation build_observation(const DroneState& drone, const PadState& pad) {
  Observation o;
  o.theta = drone.attitude;
  o.v = drone.velocity;
  o.omega = drone.angular_velocity;
  o.d = pad.position - drone.position;
  o.delta_v = pad.velocity - drone.velocity;
  return o;
}

Observation normalize_observation(const Observation& raw, const NormalizationRanges& ranges) {
  const ObservationVector b = ranges.bounds();
  const ObservationVector x = raw.flat().cwiseMax(-b).cwiseMin(b).cwiseQuotient(b);
  return Observation::from_flat(x);
}

Vec3 apply_action(const DroneState& drone, const Action& action, double scale, const Box& world_bounds) {
  return world_bounds.clamp(drone.position + scale * action.clamped().c);
}

namespace {

std::uint64_t trajectory_seed(const ScenarioSpec& scenario, std::uint64_t master_seed, std::uint64_t episode_index) {
  const std::uint64_t mixed = master_seed ^ (scenario.trajectory.seed * 0x9e3779b97f4a7c15ull);
  return derive_stream(mixed, episode_index, StreamPurpose::kTrajectory).bits();
}

EpisodeState make_state(const EnvSettings& settings, const ScenarioSpec& scenario, std::uint64_t master_seed,
                        std::uint64_t episode_index) {
  settings.validate();
  scenario.validate();
  TrajectorySpec traj = scenario.trajectory;
  traj.seed = trajectory_seed(scenario, master_seed, episode_index);
  EpisodeState s{scenario, Trajectory(traj), {}, {}, derive_stream(master_seed, episode_index, StreamPurpose::kWind),
                 {}, 0, 0.0, Outcome::kInProgress};
  s.pad = s.trajectory.at(0.0);
  s.wind.episode_is_windy = sample_episode_windiness(s.wind_rng, scenario.gusts);
  return s;
}

double substep_time(const SimConfig& sim, long substep_index) { return static_cast<double>(substep_index) * sim.physics_dt; }

StepResult advance(const EnvSettings& settings, EpisodeState& state, const Vec3& raw_setpoint, const Vec3& action_c) {
  if (state.terminated()) {
    throw UsageError(fmt::format("step on a terminated episode (outcome {})", to_string(state.outcome)));
  }
  const SimConfig& sim = settings.sim;
  const EpisodeConfig& ep = settings.episode;
  const Vec3 setpoint = sim.world_bounds.clamp(raw_setpoint);

  StepResult result;
  result.info.setpoint = setpoint;
  result.info.action = action_c;

  const Vec3 gust = gust_force_at_step(state.wind_rng, state.wind.episode_is_windy, state.scenario.gusts);
  state.wind.forces.push_back(gust);
  result.info.gust_force = gust;

  const int n = sim.substeps();
  const long base = static_cast<long>(state.step) * n;
  Vec3 force_sum = Vec3::Zero();
  int substeps_run = 0;
  Outcome outcome = Outcome::kInProgress;

  for (int j = 0; j < n; ++j) {
    Vec3 force = gust;
    if (state.scenario.impeller) {
      force += impeller_force(state.vehicle.drone.position, state.pad, *state.scenario.impeller);
    }
    SurfaceContact surface;
    if (over_pad(state.vehicle.drone.position, state.pad)) surface.surface_height = state.pad.position.z();

    state.vehicle = step_physics(state.vehicle, setpoint, force, settings.drone, sim, surface);
    state.pad = state.trajectory.at(substep_time(sim, base + j + 1));
    force_sum += force;
    ++substeps_run;

    const DroneState& d = state.vehicle.drone;
    const double height = d.position.z() - state.pad.position.z();
    const double horizontal = (d.position.head<2>() - state.pad.position.head<2>()).norm();
    const double rel_speed = (d.velocity - state.pad.velocity).norm();
    if (horizontal <= ep.success_xy_tolerance && std::abs(height) <= ep.touchdown_height &&
        rel_speed <= ep.max_touchdown_speed) {
      outcome = Outcome::kLanded;
      break;
    }
    if (over_pad(d.position, state.pad) && height < -ep.below_floor_margin) {
      outcome = Outcome::kBelowPadFloor;
      break;
    }
  }
  ++state.step;

  const DroneState& drone = state.vehicle.drone;
  const PadState& pad = state.pad;
  const Observation raw = build_observation(drone, pad);
  const double distance = raw.d.norm();

  if (outcome == Outcome::kInProgress && distance > ep.out_of_bounds_distance) outcome = Outcome::kOutOfBounds;
  if (outcome == Outcome::kInProgress && state.step >= settings.max_steps()) outcome = Outcome::kTimeout;

  RewardContext ctx;
  ctx.current_distance = distance;
  ctx.previous_distance = state.previous_distance;
  ctx.relative_velocity = drone.velocity - pad.velocity;
  ctx.drone_below_pad_surface = drone.position.z() < pad.position.z();
  {
    const double dx = std::abs(drone.position.x() - pad.position.x());
    const double dy = std::abs(drone.position.y() - pad.position.y());
    const double edge = std::max(dx, dy);
    ctx.near_pad_edge = std::abs(edge - pad.half_extent) <= settings.reward.edge_margin;
  }
  result.reward = compute_reward(ctx, settings.reward);
  state.previous_distance = distance;
  state.outcome = outcome;

  result.observation = normalize_observation(raw, settings.ranges);
  result.outcome = outcome;
  result.terminated = outcome != Outcome::kInProgress;
  result.info.distance = distance;
  result.info.horizontal_distance = (-raw.d).head<2>().norm();
  result.info.relative_speed = (drone.velocity - pad.velocity).norm();
  result.info.applied_force = force_sum / substeps_run;
  result.info.wind_active = gust.squaredNorm() > 0.0 || result.info.applied_force.norm() > settings.wind_active_threshold;
  if (state.scenario.impeller) result.info.impeller_position = impeller_position(pad, *state.scenario.impeller);
  result.info.raw_observation = raw;
  return result;
}

}  // namespace

std::pair<EpisodeState, Observation> reset_env_at(const EnvSettings& settings, const ScenarioSpec& scenario,
                                                  std::uint64_t master_seed, std::uint64_t episode_index,
                                                  const DroneState& drone) {
  EpisodeState s = make_state(settings, scenario, master_seed, episode_index);
  s.vehicle.drone = drone;
  const Observation raw = build_observation(drone, s.pad);
  s.previous_distance = raw.d.norm();
  return {std::move(s), normalize_observation(raw, settings.ranges)};
}

std::pair<EpisodeState, Observation> reset_env(const EnvSettings& settings, const ScenarioSpec& scenario,
                                               std::uint64_t master_seed, std::uint64_t episode_index) {
  RngStream spawn = derive_stream(master_seed, episode_index, StreamPurpose::kSpawn);
  const Box& region = settings.episode.spawn_region;
  Vec3 offset;
  for (int i = 0; i < 3; ++i) offset[i] = region.min[i] + spawn.uniform() * (region.max[i] - region.min[i]);
  const PadState pad0 = pad_state_at([&] {
    TrajectorySpec t = scenario.trajectory;
    t.seed = trajectory_seed(scenario, master_seed, episode_index);
    return t;
  }(), 0.0);
  DroneState drone;
  drone.position = settings.sim.world_bounds.clamp(pad0.position + offset);
  return reset_env_at(settings, scenario, master_seed, episode_index, drone);
}

StepResult step_env(const EnvSettings& settings, EpisodeState& state, const Action& action) {
  if (!action.c.allFinite()) throw StateCorruptionError("non-finite action");
  Action a = action.clamped();
  if (settings.episode.ternary_actions) {
    for (int i = 0; i < 3; ++i) a.c[i] = a.c[i] > 1.0 / 3.0 ? 1.0 : (a.c[i] < -1.0 / 3.0 ? -1.0 : 0.0);
  }
  const Vec3 setpoint = apply_action(state.vehicle.drone, a, settings.episode.action_scale, settings.sim.world_bounds);
  return advance(settings, state, setpoint, a.c);
}

StepResult step_env_setpoint(const EnvSettings& settings, EpisodeState& state, const Vec3& setpoint) {
  if (!setpoint.allFinite()) throw StateCorruptionError("non-finite setpoint");
  const Vec3 c = (setpoint - state.vehicle.drone.position) / settings.episode.action_scale;
  return advance(settings, state, setpoint, c);
}

}  // namespace padfall
