#include <gtest/gtest.h>

#include "padfall/config.hpp"

using namespace padfall;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const std::string text = emit_config(c);
  EXPECT_EQ(emit_config(parse_config(text)), text);
  EXPECT_EQ(config_hash(parse_config(text)), config_hash(c));
}

TEST(Config, ModifiedRoundTrip) {
  RunConfig c;
  c.master_seed = 77;
  c.output_dir = "runs/with, comma";
  c.env.reward.alpha = 0.1 + 0.2;
  c.env.episode.spawn_region.min = Vec3(-0.3, -0.25, 0.125);
  c.td3.hidden_dims = {32, 16};
  c.td3.lr_schedule = LrSchedule::kLinear;
  c.env.reward.shaping = ShapingMode::kLiteral;
  c.train_schedule = {{"SPL", 1000}, {"LMPL-WD-8500", 2000}};
  c.total_steps = 3000;
  c.eval_scenarios = {"CTL"};
  const RunConfig d = parse_config(emit_config(c));
  EXPECT_EQ(d.master_seed, 77u);
  EXPECT_EQ(d.output_dir, c.output_dir);
  EXPECT_EQ(d.env.reward.alpha, 0.1 + 0.2);
  EXPECT_EQ(d.env.episode.spawn_region.min, c.env.episode.spawn_region.min);
  EXPECT_EQ(d.td3.hidden_dims, c.td3.hidden_dims);
  EXPECT_EQ(d.td3.lr_schedule, LrSchedule::kLinear);
  EXPECT_EQ(d.env.reward.shaping, ShapingMode::kLiteral);
  EXPECT_EQ(d.train_schedule, c.train_schedule);
  EXPECT_EQ(d.eval_scenarios, c.eval_scenarios);
  EXPECT_EQ(emit_config(d), emit_config(c));
}

TEST(Config, PartialFileKeepsDefaults) {
  const RunConfig c = parse_config("reward:\n  alpha: 4\n");
  EXPECT_EQ(c.env.reward.alpha, 4.0);
  EXPECT_EQ(c.env.reward.zeta, RunConfig{}.env.reward.zeta);
}

TEST(Config, UnknownKeysRejectedWithPath) {
  try {
    parse_config("reward:\n  alpah: 4\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("reward.alpah"), std::string::npos);
  }
  EXPECT_THROW(parse_config("bogus: 1\n"), ConfigError);
  EXPECT_THROW(parse_config("td3:\n  batch_size: many\n"), ConfigError);
  EXPECT_THROW(parse_config("td3:\n  lr_schedule: cosine\n"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2"), ConfigError);
}

TEST(Config, ValidationRejectsBadValues) {
  EXPECT_THROW(parse_config("workers: 0\n"), ConfigError);
  EXPECT_THROW(parse_config("platform:\n  speed: 0.9\n"), ConfigError);
  EXPECT_THROW(parse_config("scenarios:\n  eval: [NOPE]\n"), ConfigError);
}

TEST(Config, Overrides) {
  RunConfig c;
  apply_override(c, "td3.batch_size=64");
  apply_override(c, "neural.hidden_dims=[8, 4]");
  apply_override(c, "training.schedule=[{scenario: LMPL, steps: 10}]");
  EXPECT_EQ(c.td3.batch_size, 64u);
  EXPECT_EQ(c.td3.hidden_dims, (std::vector<int>{8, 4}));
  EXPECT_EQ(c.train_schedule, (std::vector<ScheduleItem>{{"LMPL", 10}}));
  EXPECT_THROW(apply_override(c, "td3.nothing=1"), ConfigError);
  EXPECT_THROW(apply_override(c, "no_equals"), ConfigError);
}

TEST(Config, KeysAreUniqueAndEmitted) {
  const auto keys = config_keys();
  const std::string text = emit_config(RunConfig{});
  std::set<std::string> seen;
  for (const auto& k : keys) {
    EXPECT_TRUE(seen.insert(k).second) << k;
    const std::string leaf = k.substr(k.rfind('.') + 1);
    EXPECT_NE(text.find(leaf + ":"), std::string::npos) << k;
  }
}

TEST(Config, ScenarioApplication) {
  RunConfig c;
  c.platform.speed = 0.2;
  c.gusts.p_episode = 0.4;
  const ScenarioSpec lm = c.scenario("LMPL");
  EXPECT_EQ(lm.trajectory.kind, TrajectoryKind::kLinear);
  EXPECT_EQ(lm.trajectory.speed, 0.2);
  EXPECT_EQ(lm.gusts.p_episode, 0.0);
  const ScenarioSpec wd = c.scenario("SPL-WD-8500");
  EXPECT_EQ(wd.gusts.p_episode, 0.4);
  EXPECT_EQ(wd.impeller->magnitude, c.impeller_levels.rpm_8500);
  EXPECT_EQ(c.scenario("CMPL").master_seed, c.master_seed);
  EXPECT_TRUE(c.env.sim.ground_effect.enabled);
}
