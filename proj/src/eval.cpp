#include "padfall/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "padfall/parallel.hpp"
#include "padfall/td3.hpp"

namespace padfall {

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"SPL",         "LMPL",        "CMPL",         "CTL",
                                              "SPL-WD-4500", "SPL-WD-8500", "LMPL-WD-4500", "LMPL-WD-8500"};
  return names;
}

ScenarioSpec make_scenario(const std::string& name, std::uint64_t master_seed, int episodes,
                           const ImpellerLevels& levels, double pad_speed) {
  ScenarioSpec s;
  s.name = name;
  s.episodes = episodes;
  s.master_seed = master_seed;
  s.trajectory.speed = pad_speed;
  s.gusts.p_episode = 0.0;

  auto with_wind = [&](double magnitude) {
    ImpellerSpec imp;
    imp.magnitude = magnitude;
    s.impeller = imp;
    s.gusts.p_episode = 0.2;
  };

  if (name == "SPL") {
    s.trajectory.kind = TrajectoryKind::kStatic;
  } else if (name == "LMPL") {
    s.trajectory.kind = TrajectoryKind::kLinear;
  } else if (name == "CMPL") {
    s.trajectory.kind = TrajectoryKind::kCurved;
  } else if (name == "CTL") {
    s.trajectory.kind = TrajectoryKind::kComplex3d;
    with_wind(levels.rpm_4500);
  } else if (name == "SPL-WD-4500" || name == "SPL-WD-8500") {
    s.trajectory.kind = TrajectoryKind::kStatic;
    with_wind(name.ends_with("4500") ? levels.rpm_4500 : levels.rpm_8500);
  } else if (name == "LMPL-WD-4500" || name == "LMPL-WD-8500") {
    s.trajectory.kind = TrajectoryKind::kLinear;
    with_wind(name.ends_with("4500") ? levels.rpm_4500 : levels.rpm_8500);
  } else {
    std::string valid;
    for (const auto& n : scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError(fmt::format("unknown scenario '{}'; valid names: {}", name, valid));
  }
  if (s.trajectory.kind == TrajectoryKind::kStatic) s.trajectory.speed = 0.0;
  return s;
}

// ---------------------------------------------------------------------------

PolicyController::PolicyController(std::shared_ptr<const ParamSet> actor, MlpSpec spec)
    : actor_(std::move(actor)), spec_(std::move(spec)) {
  check_shapes(*actor_, spec_);
  if (spec_.input_dim != kObservationDim || spec_.output_dim != kActionDim) {
    throw ConfigError("checkpoint is not an actor for this environment");
  }
}

Command PolicyController::act(const EnvSettings&, const EpisodeState&, const Observation& obs) {
  return {false, policy_action(*actor_, spec_, obs)};
}

void EkfBaselineController::reset(const EnvSettings& settings, const EpisodeState& state, const Observation&) {
  inner_.emplace(cfg_, settings.sim.control_period);
  inner_->reset(state.vehicle.drone, state.pad.position);
}

Command EkfBaselineController::act(const EnvSettings&, const EpisodeState& state, const Observation&) {
  if (!inner_) throw UsageError("baseline controller used before reset");
  return {true, inner_->act(state.vehicle.drone, state.pad.position)};
}

void ScriptedOracleController::reset(const EnvSettings&, const EpisodeState&, const Observation&) {
  z_offset_ = approach_height;
}

Command ScriptedOracleController::act(const EnvSettings& settings, const EpisodeState& state, const Observation&) {
  // The position loop trails a ramp by kd/kp seconds; lead the pad by that much.
  const PidGains& g = settings.drone.pid;
  const double lag = settings.sim.control_period + g.kd.x() / g.kp.x();
  const Vec3 lead = state.pad.position + state.pad.velocity * lag;
  const double horizontal = (state.pad.position - state.vehicle.drone.position).head<2>().norm();
  if (horizontal < center_tolerance) z_offset_ = std::max(z_offset_ - descent_step, -0.05);
  return {true, Vec3(lead.x(), lead.y(), state.pad.position.z() + z_offset_)};
}

ControllerFactory make_controller_factory(const std::string& ref, const BaselineConfig& baseline) {
  if (ref == "ekf-baseline") {
    baseline.validate();
    return [baseline] { return std::make_unique<EkfBaselineController>(baseline); };
  }
  if (ref == "scripted-oracle") {
    return [] { return std::make_unique<ScriptedOracleController>(); };
  }
  auto [spec, params] = load_checkpoint(ref);
  auto shared = std::make_shared<const ParamSet>(std::move(params));
  return [shared, spec = spec] { return std::make_unique<PolicyController>(shared, spec); };
}

// ---------------------------------------------------------------------------

std::optional<Vec3> EpisodeRecord::touchdown_point() const {
  if (!landed() || rows.empty()) return std::nullopt;
  return rows.back().drone.position;
}

std::optional<double> EpisodeRecord::touchdown_distance() const {
  if (!landed() || rows.empty()) return std::nullopt;
  return (rows.back().drone.position - rows.back().pad_position).head<2>().norm();
}

std::optional<double> EpisodeRecord::touchdown_speed() const {
  if (!landed() || rows.empty()) return std::nullopt;
  return (rows.back().drone.velocity - rows.back().pad_velocity).norm();
}

namespace {

bool same_vec(const Vec3& a, const Vec3& b) {
  for (int i = 0; i < 3; ++i) {
    if (std::isnan(a[i]) && std::isnan(b[i])) continue;
    if (a[i] != b[i]) return false;
  }
  return true;
}

constexpr const char* kRecordColumns =
    "t,px,py,pz,vx,vy,vz,roll,pitch,yaw,wx,wy,wz,pad_px,pad_py,pad_pz,pad_vx,pad_vy,pad_vz,cx,cy,cz,spx,spy,spz,"
    "reward,fx,fy,fz,wind_active,imp_x,imp_y,imp_z,outcome";
constexpr int kRecordNumericColumns = 33;

}  // namespace

bool same_record(const EpisodeRecord& a, const EpisodeRecord& b) {
  if (a.scenario != b.scenario || a.controller != b.controller || a.episode_index != b.episode_index ||
      a.outcome != b.outcome || a.valid != b.valid || a.rows.size() != b.rows.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const RecordRow& x = a.rows[i];
    const RecordRow& y = b.rows[i];
    if (x.t != y.t || !(x.drone == y.drone) || !same_vec(x.pad_position, y.pad_position) ||
        !same_vec(x.pad_velocity, y.pad_velocity) || !same_vec(x.action, y.action) ||
        !same_vec(x.setpoint, y.setpoint) || x.reward != y.reward || !same_vec(x.force, y.force) ||
        x.wind_active != y.wind_active || !same_vec(x.impeller, y.impeller) || x.outcome != y.outcome) {
      return false;
    }
  }
  return true;
}

namespace {

void put_values(std::string& out, std::initializer_list<double> values) {
  for (double v : values) {
    out += fmt::format("{:.17g}", v);
    out += ',';
  }
}

void put_vec(std::string& out, const Vec3& v) { put_values(out, {v.x(), v.y(), v.z()}); }

Vec3 take_vec(const std::vector<double>& v, std::size_t at) { return {v[at], v[at + 1], v[at + 2]}; }

std::string header_value(const std::string& line, const std::string& key) {
  const std::string prefix = "# " + key + "=";
  if (line.rfind(prefix, 0) != 0) throw ConfigError(fmt::format("episode record: expected '{}'", prefix));
  return line.substr(prefix.size());
}

}  // namespace

std::string record_to_csv(const EpisodeRecord& r) {
  std::string out;
  out += "# padfall episode record v1\n";
  out += fmt::format("# scenario={}\n# controller={}\n# episode={}\n", r.scenario, r.controller, r.episode_index);
  out += kRecordColumns;
  out += '\n';
  for (const RecordRow& row : r.rows) {
    put_values(out, {row.t});
    put_vec(out, row.drone.position);
    put_vec(out, row.drone.velocity);
    put_vec(out, row.drone.attitude);
    put_vec(out, row.drone.angular_velocity);
    put_vec(out, row.pad_position);
    put_vec(out, row.pad_velocity);
    put_vec(out, row.action);
    put_vec(out, row.setpoint);
    put_values(out, {row.reward});
    put_vec(out, row.force);
    out += row.wind_active ? "1," : "0,";
    put_vec(out, row.impeller);
    out += to_string(row.outcome);
    out += '\n';
  }
  out += fmt::format("# outcome={}\n# valid={}\n", to_string(r.outcome), r.valid ? 1 : 0);
  return out;
}

EpisodeRecord record_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 7 || lines[0] != "# padfall episode record v1" || lines[4] != kRecordColumns) {
    throw ConfigError("not an episode record");
  }
  EpisodeRecord r;
  r.scenario = header_value(lines[1], "scenario");
  r.controller = header_value(lines[2], "controller");
  r.episode_index = std::stoull(header_value(lines[3], "episode"));
  for (std::size_t i = 5; i + 2 < lines.size(); ++i) {
    const std::string& line = lines[i];
    std::vector<double> v;
    v.reserve(kRecordNumericColumns);
    std::size_t pos = 0;
    for (int c = 0; c < kRecordNumericColumns; ++c) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) throw ConfigError(fmt::format("episode record: short row {}", i + 1));
      const std::string field = line.substr(pos, comma - pos);
      char* end = nullptr;
      v.push_back(std::strtod(field.c_str(), &end));
      if (end == field.c_str() || *end != '\0') {
        throw ConfigError(fmt::format("episode record: bad number '{}' on line {}", field, i + 1));
      }
      pos = comma + 1;
    }
    RecordRow row;
    row.t = v[0];
    row.drone.position = take_vec(v, 1);
    row.drone.velocity = take_vec(v, 4);
    row.drone.attitude = take_vec(v, 7);
    row.drone.angular_velocity = take_vec(v, 10);
    row.pad_position = take_vec(v, 13);
    row.pad_velocity = take_vec(v, 16);
    row.action = take_vec(v, 19);
    row.setpoint = take_vec(v, 22);
    row.reward = v[25];
    row.force = take_vec(v, 26);
    row.wind_active = v[29] != 0.0;
    row.impeller = take_vec(v, 30);
    row.outcome = outcome_from_string(line.substr(pos));
    r.rows.push_back(row);
  }
  r.outcome = outcome_from_string(header_value(lines[lines.size() - 2], "outcome"));
  r.valid = header_value(lines.back(), "valid") == "1";
  return r;
}

void save_record(const std::string& path, const EpisodeRecord& record) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError(fmt::format("cannot write {}", path));
  f << record_to_csv(record);
}

EpisodeRecord load_record(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot read {}", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return record_from_csv(ss.str());
}

EpisodeRecord run_episode(const EnvSettings& settings, Controller& controller, const ScenarioSpec& scenario,
                          std::uint64_t episode_index, const std::string& controller_name) {
  EpisodeRecord rec;
  rec.scenario = scenario.name;
  rec.controller = controller_name;
  rec.episode_index = episode_index;
  auto [state, obs] = reset_env(settings, scenario, scenario.master_seed, episode_index);
  controller.reset(settings, state, obs);
  rec.rows.reserve(static_cast<std::size_t>(settings.max_steps()));
  while (!state.terminated()) {
    const Command cmd = controller.act(settings, state, obs);
    if (!cmd.value.allFinite()) {
      rec.valid = false;
      break;
    }
    const StepResult res =
        cmd.is_setpoint ? step_env_setpoint(settings, state, cmd.value) : step_env(settings, state, Action{cmd.value});
    RecordRow row;
    row.t = state.time(settings.sim);
    row.drone = state.vehicle.drone;
    row.pad_position = state.pad.position;
    row.pad_velocity = state.pad.velocity;
    row.action = res.info.action;
    row.setpoint = res.info.setpoint;
    row.reward = res.reward;
    row.force = res.info.applied_force;
    row.wind_active = res.info.wind_active;
    row.impeller = res.info.impeller_position;
    row.outcome = res.outcome;
    rec.rows.push_back(row);
    obs = res.observation;
  }
  rec.outcome = state.outcome;
  return rec;
}

std::vector<EpisodeRecord> run_scenario(const EnvSettings& settings, const ControllerFactory& factory,
                                        const ScenarioSpec& scenario, int workers,
                                        const std::string& controller_name) {
  scenario.validate();
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(std::max(0, scenario.episodes)));
  parallel_for(records.size(), workers, [&](std::size_t i) {
    auto controller = factory();
    records[i] = run_episode(settings, *controller, scenario, i, controller_name);
  });
  return records;
}

// ---------------------------------------------------------------------------

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("pearson: series lengths differ");
  if (x.size() < 2) throw UsageError("pearson: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SummaryStats summarize(const std::vector<double>& values) {
  if (values.empty()) throw UsageError("summarize: no values");
  SummaryStats s;
  s.count = values.size();
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

SummaryStats precision_stats_cm(const std::vector<double>& distances_cm) { return summarize(distances_cm); }

LandingMetrics landing_metrics(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw UsageError("landing_metrics: no records");
  LandingMetrics m;
  m.total = records.size();
  std::vector<double> cm;
  for (const auto& r : records) {
    if (auto d = r.touchdown_distance()) {
      ++m.landed;
      cm.push_back(*d * 100.0);
    }
  }
  m.success_rate = static_cast<double>(m.landed) / static_cast<double>(m.total);
  if (!cm.empty()) m.precision_cm = precision_stats_cm(cm);
  return m;
}

VelocityCorrelation velocity_correlation_stats(const std::vector<EpisodeRecord>& records, CorrelationMode mode) {
  VelocityCorrelation out;
  std::vector<double> defined;
  for (const auto& r : records) {
    std::optional<double> value;
    if (r.rows.size() >= 2) {
      if (mode == CorrelationMode::kSpeed) {
        std::vector<double> drone, pad;
        for (const auto& row : r.rows) {
          drone.push_back(row.drone.velocity.norm());
          pad.push_back(row.pad_velocity.norm());
        }
        value = pearson(drone, pad);
      } else {
        double sum = 0.0;
        int count = 0;
        for (int axis = 0; axis < 3; ++axis) {
          std::vector<double> drone, pad;
          for (const auto& row : r.rows) {
            drone.push_back(row.drone.velocity[axis]);
            pad.push_back(row.pad_velocity[axis]);
          }
          if (auto c = pearson(drone, pad)) {
            sum += *c;
            ++count;
          }
        }
        if (count > 0) value = sum / count;
      }
    }
    out.per_episode.push_back(value);
    if (value) {
      defined.push_back(*value);
    } else {
      ++out.episodes_absent;
    }
  }
  out.episodes_used = defined.size();
  if (!defined.empty()) out.stats = summarize(defined);
  return out;
}

WindRecognition wind_recognition_correlation(const std::vector<EpisodeRecord>& records) {
  WindRecognition out;
  for (int axis = 0; axis < 3; ++axis) {
    for (bool windy : {true, false}) {
      double sum = 0.0;
      int count = 0;
      for (const auto& r : records) {
        std::vector<double> commanded, realized;
        for (const auto& row : r.rows) {
          if (row.wind_active != windy) continue;
          commanded.push_back(row.setpoint[axis]);
          realized.push_back(row.drone.position[axis]);
        }
        if (commanded.size() < 2) continue;
        if (auto c = pearson(commanded, realized)) {
          sum += *c;
          ++count;
        }
      }
      auto& slot = windy ? out.wind[axis] : out.calm[axis];
      if (count > 0) slot = sum / count;
    }
  }
  return out;
}

}  // namespace padfall
