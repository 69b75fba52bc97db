#include "padfall/reward.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace padfall {

void RewardParams::validate() const {
  if (!(far_threshold > near_threshold && near_threshold > 0.0)) {
    throw ConfigError("reward thresholds must satisfy far_threshold > near_threshold > 0");
  }
  if (!(q_max > 0.0)) throw ConfigError("reward.q_max must be > 0");
  if (!(zeta >= 0.0 && eta >= 0.0)) throw ConfigError("reward.zeta and reward.eta must be >= 0");
  for (double v : {gamma, alpha, beta_penalty, speed_coeff, edge_margin}) {
    if (!std::isfinite(v)) throw ConfigError("reward constants must be finite");
  }
}

double attractive_potential(double distance, double zeta) { return 0.5 * zeta * distance * distance; }

double repulsive_potential(double sigma, double eta, double q_max) {
  if (sigma == 0.0) throw SingularInputError("repulsive potential undefined at zero obstacle distance");
  if (sigma >= q_max) return 0.0;
  const double k = 1.0 / sigma - 1.0 / q_max;
  return 0.5 * eta * k * k;
}

double speed_term(const Vec3& relative_velocity, double speed_coeff) {
  const double horizontal = relative_velocity.head<2>().norm();
  const double ascent = std::max(0.0, relative_velocity.z());
  return -speed_coeff * (horizontal + ascent);
}

double compute_reward(const RewardContext& ctx, const RewardParams& params) {
  const double r = ctx.current_distance;
  double arg = 0.0;
  if (r > params.far_threshold) {
    arg = params.gamma;
  } else if (r > params.near_threshold) {
    const double diff = params.shaping == ShapingMode::kProgress ? ctx.previous_distance - r : 0.0;
    arg = params.alpha * diff;
  } else {
    const double u = attractive_potential(r, params.zeta) +
                     repulsive_potential(ctx.nearest_obstacle_distance, params.eta, params.q_max);
    const double delta = speed_term(ctx.relative_velocity, params.speed_coeff);
    if (r < params.near_threshold) {
      const double beta = (ctx.drone_below_pad_surface || ctx.near_pad_edge) ? params.beta_penalty : 0.0;
      arg = -u - beta + delta;
    } else {
      arg = -u + delta;
    }
  }
  // tanh saturates to +-1 in double precision for |arg| > ~19; keep the open interval.
  constexpr double kEdge = 1.0 - 1e-15;
  return std::clamp(std::tanh(arg), -kEdge, kEdge);
}

LandscapeGrid export_reward_landscape(const RewardParams& params, const GridSpec& grid) {
  if (grid.samples_a < 1 || grid.samples_b < 1) throw UsageError("landscape grid needs at least one sample per axis");
  for (double v : {grid.min_a, grid.max_a, grid.min_b, grid.max_b, grid.offset}) {
    if (!std::isfinite(v)) throw UsageError("landscape grid bounds must be finite");
  }
  auto axis = [](double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return out;
  };
  LandscapeGrid out;
  out.grid = grid;
  out.a = axis(grid.min_a, grid.max_a, grid.samples_a);
  out.b = axis(grid.min_b, grid.max_b, grid.samples_b);
  out.reward.reserve(out.a.size() * out.b.size());
  for (double b : out.b) {
    for (double a : out.a) {
      const Vec3 p = grid.plane == LandscapePlane::kXY ? Vec3(a, b, grid.offset) : Vec3(a, grid.offset, b);
      RewardContext ctx;
      ctx.current_distance = p.norm();
      ctx.previous_distance = ctx.current_distance;
      ctx.drone_below_pad_surface = p.z() < 0.0;
      out.reward.push_back(compute_reward(ctx, params));
    }
  }
  return out;
}

std::string landscape_csv(const LandscapeGrid& grid) {
  const bool xy = grid.grid.plane == LandscapePlane::kXY;
  std::string out = xy ? "x,y,reward\n" : "x,z,reward\n";
  for (std::size_t ib = 0; ib < grid.b.size(); ++ib) {
    for (std::size_t ia = 0; ia < grid.a.size(); ++ia) {
      out += fmt::format("{:.17g},{:.17g},{:.17g}\n", grid.a[ia], grid.b[ib], grid.at(ia, ib));
    }
  }
  return out;
}

namespace {

// Five-stop approximation of a perceptually ordered purple-to-yellow map.
std::string colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

}  // namespace

std::string landscape_svg(const LandscapeGrid& grid) {
  const double lo = *std::min_element(grid.reward.begin(), grid.reward.end());
  const double hi = *std::max_element(grid.reward.begin(), grid.reward.end());
  const double span = hi > lo ? hi - lo : 1.0;
  constexpr int kCell = 4;
  constexpr int kMargin = 40;
  const int w = static_cast<int>(grid.a.size()) * kCell;
  const int h = static_cast<int>(grid.b.size()) * kCell;
  const bool xy = grid.grid.plane == LandscapePlane::kXY;

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      w + 2 * kMargin, h + 2 * kMargin);
  out += fmt::format("<text x=\"{}\" y=\"20\">reward landscape ({} plane), range [{:.4f}, {:.4f}]</text>\n", kMargin,
                     xy ? "XY" : "XZ", lo, hi);
  for (std::size_t ib = 0; ib < grid.b.size(); ++ib) {
    for (std::size_t ia = 0; ia < grid.a.size(); ++ia) {
      const int x = kMargin + static_cast<int>(ia) * kCell;
      const int y = kMargin + h - (static_cast<int>(ib) + 1) * kCell;
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", x, y, kCell, kCell,
                         colormap((grid.at(ia, ib) - lo) / span));
    }
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\">x [m]</text>\n", kMargin + w / 2, h + kMargin + 25);
  out += fmt::format("<text x=\"5\" y=\"{}\">{} [m]</text>\n", kMargin + h / 2, xy ? "y" : "z");
  out += "</svg>\n";
  return out;
}

}  // namespace padfall
