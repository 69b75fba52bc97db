#include <cmath>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "padfall/env.hpp"

using namespace padfall;

namespace {

DroneState drone_at(const Vec3& p) {
  DroneState d;
  d.position = p;
  return d;
}

}  // namespace

TEST(Env, ObservationAtPadCenter) {
  PadState pad;
  pad.position = Vec3(0.2, 0.1, 0.5);
  const Observation o = build_observation(drone_at(pad.position), pad);
  EXPECT_EQ(o.d, Vec3::Zero());
  EXPECT_EQ(o.delta_v, Vec3::Zero());
}

TEST(Env, RelativeVelocityAtSpeedBound) {
  PadState pad;
  pad.velocity = Vec3(0.46, 0, 0);
  EXPECT_EQ(build_observation(DroneState{}, pad).delta_v, Vec3(0.46, 0, 0));
}

TEST(Env, ObservationMatchesSubtraction) {
  RngStream rng(8);
  auto v = [&] { return Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)); };
  for (int i = 0; i < 1000; ++i) {
    DroneState d;
    d.position = v();
    d.velocity = v();
    PadState p;
    p.position = v();
    p.velocity = v();
    const Observation o = build_observation(d, p);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(o.d[k], p.position[k] - d.position[k]);
      EXPECT_EQ(o.delta_v[k], p.velocity[k] - d.velocity[k]);
    }
  }
}

TEST(Env, Normalization) {
  Observation raw;
  raw.v = Vec3(3.0, 0.0, 0.0);
  EXPECT_EQ(normalize_observation(raw, {}).v, Vec3(1.0, 0.0, 0.0));
  raw.v = Vec3(-5.0, 0.0, 1.0);
  EXPECT_EQ(normalize_observation(raw, {}).v, Vec3(-1.0, 0.0, 0.5));
  const Observation n = normalize_observation(raw, {});
  EXPECT_EQ(n.theta, Vec3::Zero());
  EXPECT_EQ(Observation::from_flat(n.flat()), n);
}

TEST(Env, ActionMapping) {
  const Box world{Vec3::Constant(-10), Vec3::Constant(10)};
  const DroneState d = drone_at(Vec3(1, 1, 1));
  EXPECT_LT((apply_action(d, {Vec3(1, 0, -1)}, 0.1, world) - Vec3(1.1, 1.0, 0.9)).norm(), 1e-15);
  EXPECT_EQ(apply_action(d, {Vec3::Zero()}, 0.1, world), d.position);
  EXPECT_LT((apply_action(d, {Vec3(0.5, 0.5, 0)}, 0.1, world) - Vec3(1.05, 1.05, 1.0)).norm(), 1e-15);
  EXPECT_LT((apply_action(d, {Vec3(7, 0, 0)}, 0.1, world) - Vec3(1.1, 1, 1)).norm(), 1e-15);
}

TEST(Env, LandsOnFirstStepAtPadCenter) {
  EnvSettings s;
  ScenarioSpec sc;
  auto [state, obs] = reset_env_at(s, sc, 0, 0, drone_at(sc.trajectory.origin));
  const StepResult r = step_env(s, state, {});
  EXPECT_EQ(r.outcome, Outcome::kLanded);
  EXPECT_TRUE(r.terminated);
  EXPECT_THROW(step_env(s, state, {}), UsageError);
}

TEST(Env, FarDroneIsOutOfBounds) {
  EnvSettings s;
  ScenarioSpec sc;
  auto [state, obs] = reset_env_at(s, sc, 0, 0, drone_at(sc.trajectory.origin + Vec3(5, 0, 0)));
  EXPECT_EQ(step_env(s, state, {}).outcome, Outcome::kOutOfBounds);
}

TEST(Env, HoverTimesOutAtStep600) {
  EnvSettings s;
  ScenarioSpec sc;
  auto [state, obs] = reset_env_at(s, sc, 0, 0, drone_at(sc.trajectory.origin + Vec3(0, 0, 1)));
  int steps = 0;
  StepResult r;
  do {
    r = step_env(s, state, {});
    ++steps;
  } while (!r.terminated);
  EXPECT_EQ(r.outcome, Outcome::kTimeout);
  EXPECT_EQ(steps, 600);
  EXPECT_EQ(s.max_steps(), 600);
}

TEST(Env, BelowFloorTerminates) {
  EnvSettings s;
  ScenarioSpec sc;
  auto [state, obs] = reset_env_at(s, sc, 0, 0, drone_at(sc.trajectory.origin + Vec3(0, 0, 0.05)));
  StepResult r;
  do r = step_env_setpoint(s, state, sc.trajectory.origin - Vec3(0, 0, 1));
  while (!r.terminated);
  EXPECT_EQ(r.outcome, Outcome::kBelowPadFloor);
}

TEST(Env, ResetIsDeterministic) {
  EnvSettings s;
  ScenarioSpec sc;
  sc.trajectory.kind = TrajectoryKind::kCurved;
  const auto a = reset_env(s, sc, 42, 7);
  const auto b = reset_env(s, sc, 42, 7);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.first.vehicle, b.first.vehicle);
  EXPECT_EQ(a.first.pad, b.first.pad);
}

TEST(Env, SpawnsDifferAcrossEpisodes) {
  EnvSettings s;
  ScenarioSpec sc;
  std::set<std::tuple<double, double, double>> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const Vec3 p = reset_env(s, sc, 1, i).first.vehicle.drone.position;
    seen.insert({p.x(), p.y(), p.z()});
    EXPECT_TRUE(s.episode.spawn_region.contains(p - sc.trajectory.origin, 1e-12));
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Env, CalmScenarioHasZeroWind) {
  EnvSettings s;
  ScenarioSpec sc;
  sc.gusts.p_episode = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto [state, obs] = reset_env(s, sc, 3, i);
    for (int k = 0; k < 50 && !state.terminated(); ++k) step_env(s, state, {});
    EXPECT_FALSE(state.wind.episode_is_windy);
    for (const Vec3& f : state.wind.forces) EXPECT_EQ(f, Vec3::Zero());
  }
}

TEST(Env, EpisodeIsBitReproducible) {
  EnvSettings s;
  ScenarioSpec sc;
  sc.trajectory.kind = TrajectoryKind::kLinear;
  sc.gusts.p_episode = 1.0;
  sc.impeller = ImpellerSpec{};
  auto run = [&] {
    auto [state, obs] = reset_env(s, sc, 9, 2);
    RngStream actions(77);
    std::vector<StepResult> out;
    while (!state.terminated() && out.size() < 200) {
      out.push_back(step_env(s, state, {Vec3(actions.uniform(-1, 1), actions.uniform(-1, 1), actions.uniform(-1, 1))}));
    }
    return out;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].observation, b[i].observation);
    EXPECT_EQ(a[i].reward, b[i].reward);
    EXPECT_EQ(a[i].outcome, b[i].outcome);
    EXPECT_EQ(a[i].info.applied_force, b[i].info.applied_force);
  }
}

TEST(Env, OutcomeNames) {
  for (Outcome o : {Outcome::kInProgress, Outcome::kLanded, Outcome::kOutOfBounds, Outcome::kBelowPadFloor,
                    Outcome::kTimeout}) {
    EXPECT_EQ(outcome_from_string(to_string(o)), o);
  }
}
