#include <cmath>

#include <gtest/gtest.h>

#include "padfall/wind.hpp"

using namespace padfall;

TEST(Wind, DegenerateEpisodeProbabilities) {
  RngStream rng(1);
  GustConfig cfg;
  cfg.p_episode = 0.0;
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(sample_episode_windiness(rng, cfg));
  cfg.p_episode = 1.0;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(sample_episode_windiness(rng, cfg));
}

TEST(Wind, EpisodeRate) {
  RngStream rng(2);
  GustConfig cfg;
  int windy = 0;
  for (int i = 0; i < 100000; ++i) windy += sample_episode_windiness(rng, cfg);
  EXPECT_NEAR(windy / 1e5, 0.2, 0.01);
}

TEST(Wind, CalmEpisodeHasNoForce) {
  RngStream rng(3);
  const RngStream before = rng;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(gust_force_at_step(rng, false, GustConfig{}), Vec3::Zero());
  EXPECT_TRUE(rng == before);
}

TEST(Wind, ClosedGateHasNoForce) {
  GustConfig cfg;
  cfg.p_step = 0.0;
  RngStream rng(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(gust_force_at_step(rng, true, cfg), Vec3::Zero());
}

TEST(Wind, ActiveForceBoundsAndMean) {
  GustConfig cfg;
  cfg.p_step = 1.0;
  RngStream rng(5);
  Vec3 sum = Vec3::Zero();
  for (int i = 0; i < 100000; ++i) {
    const Vec3 f = gust_force_at_step(rng, true, cfg);
    EXPECT_TRUE((f.array().abs() <= 0.005).all());
    sum += f;
  }
  EXPECT_LT((sum / 1e5).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Wind, ImpellerFalloff) {
  ImpellerSpec spec;
  PadState pad;
  pad.position = Vec3(0, 0, 0.5);
  const Vec3 fan = impeller_position(pad, spec);
  EXPECT_EQ(impeller_force(fan - 0.1 * spec.aim(), pad, spec), Vec3::Zero());
  const Vec3 at_fan = impeller_force(fan, pad, spec);
  EXPECT_EQ(at_fan, spec.magnitude * spec.aim());
  const Vec3 far = impeller_force(fan + spec.axial_falloff_length * spec.aim(), pad, spec);
  EXPECT_NEAR(far.norm(), spec.magnitude / std::exp(1.0), 1e-12);
}

TEST(Wind, ImpellerMovesWithPad) {
  ImpellerSpec spec;
  PadState a, b;
  b.position = Vec3(1, 2, 0.3);
  const Vec3 p(0.1, 0.05, 0.02);
  EXPECT_LT((impeller_force(a.position + p, a, spec) - impeller_force(b.position + p, b, spec)).norm(), 1e-15);
}

TEST(Wind, Validation) {
  GustConfig g;
  g.p_step = 1.5;
  EXPECT_THROW(g.validate(), ConfigError);
  ImpellerSpec s;
  s.jet_radius = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}
