#pragma once

#include <vector>

#include "padfall/platform.hpp"

namespace padfall {

/// Memoizing evaluator for a TrajectorySpec. `at(t)` returns exactly what
/// pad_state_at(spec, t) returns; segments are generated once and reused,
/// which keeps per-substep queries inside an episode cheap.
class Trajectory {
 public:
  Trajectory() : Trajectory(TrajectorySpec{}) {}
  explicit Trajectory(const TrajectorySpec& spec);

  PadState at(double t);
  const TrajectorySpec& spec() const { return spec_; }

 private:
  struct Segment {
    Eigen::Vector2d start = Eigen::Vector2d::Zero();
    double heading = 0.0;
    double curvature = 0.0;  ///< signed, 1/m; zero for straight segments
    bool resting = false;
  };
  struct Sample {
    Eigen::Vector2d xy = Eigen::Vector2d::Zero();
    Eigen::Vector2d vxy = Eigen::Vector2d::Zero();
  };

  Sample evaluate(const Segment& seg, double tau) const;
  bool segment_inside(const Segment& seg) const;
  void extend_to(std::size_t index);

  TrajectorySpec spec_;
  double horizontal_speed_ = 0.0;
  std::vector<Segment> segments_;
};

}  // namespace padfall
