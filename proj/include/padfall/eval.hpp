#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "padfall/ekf.hpp"
#include "padfall/env.hpp"
#include "padfall/neural.hpp"

namespace padfall {

// ---------------------------------------------------------------------------
// Scenario catalog

const std::vector<std::string>& scenario_names();

/// Builds a named scenario. Throws ConfigError listing the valid names.
ScenarioSpec make_scenario(const std::string& name, std::uint64_t master_seed = 0, int episodes = 15,
                           const ImpellerLevels& levels = {}, double pad_speed = 0.3);

// ---------------------------------------------------------------------------
// Controllers

/// Either a normalized action for step_env or an absolute setpoint.
struct Command {
  bool is_setpoint = false;
  Vec3 value = Vec3::Zero();
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) = 0;
  virtual Command act(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

class PolicyController : public Controller {
 public:
  PolicyController(std::shared_ptr<const ParamSet> actor, MlpSpec spec);
  void reset(const EnvSettings&, const EpisodeState&, const Observation&) override {}
  Command act(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) override;

 private:
  std::shared_ptr<const ParamSet> actor_;
  MlpSpec spec_;
};

/// EKF tracker plus pursuit law, measuring the true pad position.
class EkfBaselineController : public Controller {
 public:
  explicit EkfBaselineController(BaselineConfig cfg) : cfg_(std::move(cfg)) {}
  void reset(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) override;
  Command act(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) override;

 private:
  BaselineConfig cfg_;
  std::optional<BaselineController> inner_;
};

/// Harness self-test: reads the true pad state and places the setpoint on it,
/// descending once centered.
class ScriptedOracleController : public Controller {
 public:
  void reset(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) override;
  Command act(const EnvSettings& settings, const EpisodeState& state, const Observation& obs) override;

  double approach_height = 0.3;  ///< m above the pad
  double center_tolerance = 0.03;
  double descent_step = 0.01;  ///< m per decision

 private:
  double z_offset_ = 0.0;
};

/// Resolves "ekf-baseline", "scripted-oracle", or a checkpoint path.
ControllerFactory make_controller_factory(const std::string& ref, const BaselineConfig& baseline = {});

// ---------------------------------------------------------------------------
// Episode records

struct RecordRow {
  double t = 0.0;
  DroneState drone;
  Vec3 pad_position = Vec3::Zero();
  Vec3 pad_velocity = Vec3::Zero();
  Vec3 action = Vec3::Zero();
  Vec3 setpoint = Vec3::Zero();
  double reward = 0.0;
  Vec3 force = Vec3::Zero();
  bool wind_active = false;
  Vec3 impeller = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Outcome outcome = Outcome::kInProgress;
};

struct EpisodeRecord {
  std::string scenario;
  std::string controller;
  std::uint64_t episode_index = 0;
  std::vector<RecordRow> rows;  ///< one per decision step, post-step state
  Outcome outcome = Outcome::kInProgress;
  bool valid = true;  ///< false when the controller produced non-finite output

  bool landed() const { return valid && outcome == Outcome::kLanded; }
  /// Present iff landed.
  std::optional<Vec3> touchdown_point() const;
  /// Horizontal distance from the pad center at touchdown, m.
  std::optional<double> touchdown_distance() const;
  /// |v_drone - v_pad| at touchdown, m/s.
  std::optional<double> touchdown_speed() const;
};

bool same_record(const EpisodeRecord& a, const EpisodeRecord& b);

std::string record_to_csv(const EpisodeRecord& record);
EpisodeRecord record_from_csv(const std::string& text);
void save_record(const std::string& path, const EpisodeRecord& record);
EpisodeRecord load_record(const std::string& path);

EpisodeRecord run_episode(const EnvSettings& settings, Controller& controller, const ScenarioSpec& scenario,
                          std::uint64_t episode_index, const std::string& controller_name = "");

/// scenario.episodes rollouts with episode indices 0..n-1, in index order.
std::vector<EpisodeRecord> run_scenario(const EnvSettings& settings, const ControllerFactory& factory,
                                        const ScenarioSpec& scenario, int workers,
                                        const std::string& controller_name = "");

// ---------------------------------------------------------------------------
// Metrics

/// Sample Pearson coefficient; nullopt when either series is constant.
/// Throws UsageError on length mismatch or fewer than two samples.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  ///< population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Throws UsageError on an empty input.
SummaryStats summarize(const std::vector<double>& values);

struct LandingMetrics {
  std::size_t total = 0;
  std::size_t landed = 0;
  double success_rate = 0.0;
  std::optional<SummaryStats> precision_cm;  ///< over landed episodes only
};

LandingMetrics landing_metrics(const std::vector<EpisodeRecord>& records);

/// Population statistics of touchdown distances given in cm.
SummaryStats precision_stats_cm(const std::vector<double>& distances_cm);

enum class CorrelationMode { kSpeed, kPerAxis };

struct VelocityCorrelation {
  std::optional<SummaryStats> stats;
  std::size_t episodes_used = 0;
  std::size_t episodes_absent = 0;
  std::vector<std::optional<double>> per_episode;
};

/// Per-episode Pearson r between drone and pad speed series (or, in per-axis
/// mode, the mean of the defined per-axis coefficients).
VelocityCorrelation velocity_correlation_stats(const std::vector<EpisodeRecord>& records,
                                               CorrelationMode mode = CorrelationMode::kSpeed);

struct WindRecognition {
  std::array<std::optional<double>, 3> wind;
  std::array<std::optional<double>, 3> calm;
};

/// Per axis, Pearson r between setpoint and realized position, split by the
/// wind_active flag and averaged over episodes where defined.
WindRecognition wind_recognition_correlation(const std::vector<EpisodeRecord>& records);

// ---------------------------------------------------------------------------
// Reports

struct ScenarioResult {
  std::string scenario;
  std::string controller;
  std::vector<EpisodeRecord> records;
};

/// "100%", "91.67%", "0%".
std::string format_percent(double fraction);

struct ReportTables {
  std::string success;
  std::string precision;
  std::string precision_wind;
  std::string velocity_correlation;
  std::string wind_recognition;
};

ReportTables build_report_tables(const std::vector<ScenarioResult>& results);

/// Drone path (blue), pad path (red), impeller position (green); top view and side view.
std::string trajectory_svg(const EpisodeRecord& record);

/// Writes the tables as CSV plus one SVG per episode into `dir`.
void aggregate_report(const std::vector<ScenarioResult>& results, const std::string& dir);

}  // namespace padfall
