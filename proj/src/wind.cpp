#include "padfall/wind.hpp"

#include <cmath>

namespace padfall {

void GustConfig::validate() const {
  if (!(p_episode >= 0.0 && p_episode <= 1.0)) throw ConfigError("wind.p_episode must be in [0, 1]");
  if (!(p_step >= 0.0 && p_step <= 1.0)) throw ConfigError("wind.p_step must be in [0, 1]");
  if (!(component_range >= 0.0)) throw ConfigError("wind.component_range must be >= 0");
}

void ImpellerSpec::validate() const {
  if (!(magnitude >= 0.0)) throw ConfigError("impeller magnitude must be >= 0");
  if (!(jet_radius > 0.0)) throw ConfigError("impeller jet_radius must be > 0");
  if (!(axial_falloff_length > 0.0)) throw ConfigError("impeller axial_falloff_length must be > 0");
  if (!(origin_offset.norm() > 0.0)) throw ConfigError("impeller origin_offset must be non-zero");
}

bool sample_episode_windiness(RngStream& rng, const GustConfig& cfg) { return rng.uniform() < cfg.p_episode; }

Vec3 gust_force_at_step(RngStream& rng, bool windy, const GustConfig& cfg) {
  if (!windy) return Vec3::Zero();
  if (!(rng.uniform() < cfg.p_step)) return Vec3::Zero();
  // sgn(f) * |f| is f itself: the sign and magnitude come from one uniform draw per axis.
  const double r = cfg.component_range;
  const double fx = rng.uniform(-r, r);
  const double fy = rng.uniform(-r, r);
  const double fz = rng.uniform(-r, r);
  return {fx, fy, fz};
}

Vec3 impeller_position(const PadState& pad, const ImpellerSpec& spec) { return pad.position + spec.origin_offset; }

Vec3 impeller_force(const Vec3& drone_position, const PadState& pad, const ImpellerSpec& spec) {
  const Vec3 aim = spec.aim();
  const Vec3 rel = drone_position - impeller_position(pad, spec);
  const double s = rel.dot(aim);
  if (s < 0.0) return Vec3::Zero();
  const double r = (rel - s * aim).norm();
  const double q = r / spec.jet_radius;
  return spec.magnitude * std::exp(-s / spec.axial_falloff_length) * std::exp(-q * q) * aim;
}

}  // namespace padfall
