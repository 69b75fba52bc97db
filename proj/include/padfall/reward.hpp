#pragma once

#include <limits>
#include <string>
#include <vector>

#include "padfall/common.hpp"

namespace padfall {

/// How the mid-range branch reads its distance difference.
enum class ShapingMode {
  kProgress,  ///< previous-step distance minus current distance
  kLiteral,   ///< current distance minus itself, i.e. always zero
};

struct RewardParams {
  double gamma = -1.0;        ///< far-field penalty argument
  double alpha = 1.0;         ///< progress shaping scale, 1/m
  double beta_penalty = 1.0;  ///< below-pad / edge penalty
  double zeta = 1.0;          ///< attractive strength, 1/m^2
  double eta = 1.0;           ///< repulsive strength
  double q_max = 0.5;         ///< repulsive range, m
  double far_threshold = 2.0;
  double near_threshold = 0.1;
  double speed_coeff = 0.5;  ///< s/m
  double edge_margin = 0.05;
  ShapingMode shaping = ShapingMode::kProgress;

  void validate() const;
};

struct RewardContext {
  double current_distance = 0.0;
  double previous_distance = 0.0;
  double nearest_obstacle_distance = std::numeric_limits<double>::infinity();
  Vec3 relative_velocity = Vec3::Zero();  ///< drone velocity minus pad velocity
  bool drone_below_pad_surface = false;
  bool near_pad_edge = false;
};

double attractive_potential(double distance, double zeta);

/// Throws SingularInputError when sigma == 0 (contact with an obstacle).
double repulsive_potential(double sigma, double eta, double q_max);

/// Penalizes horizontal relative speed and relative ascent; descent toward the pad is free.
double speed_term(const Vec3& relative_velocity, double speed_coeff);

double compute_reward(const RewardContext& ctx, const RewardParams& params);

enum class LandscapePlane { kXY, kXZ };

struct GridSpec {
  LandscapePlane plane = LandscapePlane::kXY;
  double min_a = -2.5, max_a = 2.5;  ///< first axis (x)
  double min_b = -2.5, max_b = 2.5;  ///< second axis (y or z)
  int samples_a = 101;
  int samples_b = 101;
  /// Out-of-plane coordinate relative to the pad center (z for XY, y for XZ).
  double offset = 0.0;
};

struct LandscapeGrid {
  GridSpec grid;
  std::vector<double> a;       ///< axis coordinates
  std::vector<double> b;
  std::vector<double> reward;  ///< row-major, b index outer

  double at(int ia, int ib) const { return reward[static_cast<std::size_t>(ib) * a.size() + ia]; }
};

/// Evaluates compute_reward around a pad at the origin with a zero-velocity,
/// no-progress context. Points below the pad surface (XZ plane, z < 0) get the
/// below-surface flag.
LandscapeGrid export_reward_landscape(const RewardParams& params, const GridSpec& grid);

std::string landscape_csv(const LandscapeGrid& grid);
std::string landscape_svg(const LandscapeGrid& grid);

}  // namespace padfall
