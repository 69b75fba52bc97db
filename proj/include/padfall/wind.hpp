#pragma once

#include <optional>
#include <vector>

#include "padfall/common.hpp"
#include "padfall/platform.hpp"

namespace padfall {

/// Two-level stochastic gusts: one coin per episode decides whether the
/// episode is windy, then one coin per decision step gates a bounded random
/// world-frame force. Forces are in newtons.
struct GustConfig {
  double p_episode = 0.2;
  double p_step = 0.2;
  double component_range = 0.005;

  void validate() const;
};

/// Directed jet from a fan mounted beside the pad and aimed at its center.
/// The fan sits at pad.position + origin_offset and moves rigidly with the pad.
struct ImpellerSpec {
  Vec3 origin_offset{-0.3, 0.0, 0.0};
  double magnitude = 0.02;
  double jet_radius = 0.15;
  double axial_falloff_length = 0.6;

  Vec3 aim() const { return (-origin_offset).normalized(); }
  void validate() const;
};

/// Calibration of the two fan speed levels used in the wind scenarios.
struct ImpellerLevels {
  double rpm_4500 = 0.02;
  double rpm_8500 = 0.05;
};

/// Per-episode record of applied gust forces, one entry per decision step.
struct WindSchedule {
  bool episode_is_windy = false;
  std::vector<Vec3> forces;
};

/// true with probability cfg.p_episode.
bool sample_episode_windiness(RngStream& rng, const GustConfig& cfg);

/// The force applied during one decision step. Draws exactly one gating
/// uniform when windy (plus three component uniforms when the gate opens),
/// and nothing when not windy.
Vec3 gust_force_at_step(RngStream& rng, bool windy, const GustConfig& cfg);

Vec3 impeller_position(const PadState& pad, const ImpellerSpec& spec);

Vec3 impeller_force(const Vec3& drone_position, const PadState& pad, const ImpellerSpec& spec);

}  // namespace padfall
