#include "padfall/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "padfall/eval.hpp"

namespace padfall {

RunConfig::RunConfig() {
  env.sim.ground_effect.enabled = true;
  baseline.dt_factor = env.sim.control_period;
}

void RunConfig::validate() const {
  env.validate();
  platform.validate();
  gusts.validate();
  impeller.validate();
  td3.validate();
  baseline.validate();
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (episodes_per_scenario < 1) throw ConfigError("scenarios.episodes: must be >= 1");
  if (!(impeller_levels.rpm_4500 >= 0.0 && impeller_levels.rpm_8500 >= 0.0)) {
    throw ConfigError("wind.impeller_4500/impeller_8500: must be >= 0");
  }
  for (const auto& name : eval_scenarios) scenario(name);
  if (train_schedule.empty()) throw ConfigError("training.schedule: must not be empty");
  for (const auto& item : train_schedule) scenario(item.scenario);
  scenario(train_eval_scenario);
}

ScenarioSpec RunConfig::scenario(const std::string& name) const {
  ScenarioSpec s = make_scenario(name, master_seed, episodes_per_scenario, impeller_levels, platform.speed);
  const TrajectoryKind kind = s.trajectory.kind;
  const double speed = s.trajectory.speed;
  s.trajectory = platform;
  s.trajectory.kind = kind;
  s.trajectory.speed = speed;
  if (s.impeller) {
    const double magnitude = s.impeller->magnitude;
    s.impeller = impeller;
    s.impeller->magnitude = magnitude;
  }
  const bool windy = s.gusts.p_episode > 0.0;
  s.gusts = gusts;
  if (!windy) s.gusts.p_episode = 0.0;
  return s;
}

std::vector<ScheduleEntry> RunConfig::schedule() const {
  std::vector<ScheduleEntry> out;
  for (const auto& item : train_schedule) out.push_back({scenario(item.scenario), item.steps});
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Value codecs

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <typename T>
T scalar_as(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw ConfigError(fmt::format("expected {}", what));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(fmt::format("expected {}, got '{}'", what, n.Scalar()));
  }
}

struct Codec {
  std::function<std::string(const RunConfig&)> emit;
  std::function<void(RunConfig&, const YAML::Node&)> load;
};

template <typename Get>
Codec real(Get get) {
  return {[get](const RunConfig& c) { return fmt::format("{}", get(const_cast<RunConfig&>(c))); },
          [get](RunConfig& c, const YAML::Node& n) { get(c) = scalar_as<double>(n, "a number"); }};
}

template <typename Get>
Codec integer(Get get) {
  using T = std::remove_reference_t<decltype(get(std::declval<RunConfig&>()))>;
  return {[get](const RunConfig& c) { return fmt::format("{}", get(const_cast<RunConfig&>(c))); },
          [get](RunConfig& c, const YAML::Node& n) {
            if (n.IsScalar() && std::is_unsigned_v<T> && !n.Scalar().empty() && n.Scalar()[0] == '-') {
              throw ConfigError("expected a non-negative integer");
            }
            get(c) = scalar_as<T>(n, "an integer");
          }};
}

template <typename Get>
Codec boolean(Get get) {
  return {[get](const RunConfig& c) { return std::string(get(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [get](RunConfig& c, const YAML::Node& n) { get(c) = scalar_as<bool>(n, "true or false"); }};
}

template <typename Get>
Codec text(Get get) {
  return {[get](const RunConfig& c) { return quote(get(const_cast<RunConfig&>(c))); },
          [get](RunConfig& c, const YAML::Node& n) { get(c) = scalar_as<std::string>(n, "a string"); }};
}

template <typename Get>
Codec vec3(Get get) {
  return {[get](const RunConfig& c) {
            const Vec3& v = get(const_cast<RunConfig&>(c));
            return fmt::format("[{}, {}, {}]", v.x(), v.y(), v.z());
          },
          [get](RunConfig& c, const YAML::Node& n) {
            if (!n.IsSequence() || n.size() != 3) throw ConfigError("expected a 3-element list");
            Vec3 v;
            for (int i = 0; i < 3; ++i) v[i] = scalar_as<double>(n[i], "a number");
            get(c) = v;
          }};
}

template <typename Get>
Codec int_list(Get get) {
  return {[get](const RunConfig& c) {
            std::string s = "[";
            for (int v : get(const_cast<RunConfig&>(c))) s += (s.size() > 1 ? ", " : "") + std::to_string(v);
            return s + "]";
          },
          [get](RunConfig& c, const YAML::Node& n) {
            if (!n.IsSequence()) throw ConfigError("expected a list of integers");
            std::vector<int> out;
            for (const auto& item : n) out.push_back(scalar_as<int>(item, "an integer"));
            get(c) = out;
          }};
}

template <typename Get>
Codec name_list(Get get) {
  return {[get](const RunConfig& c) {
            std::string s = "[";
            for (const auto& v : get(const_cast<RunConfig&>(c))) s += (s.size() > 1 ? ", " : "") + quote(v);
            return s + "]";
          },
          [get](RunConfig& c, const YAML::Node& n) {
            if (!n.IsSequence()) throw ConfigError("expected a list of names");
            std::vector<std::string> out;
            for (const auto& item : n) out.push_back(scalar_as<std::string>(item, "a name"));
            get(c) = out;
          }};
}

template <typename E, typename Get>
Codec enumeration(Get get, std::vector<std::pair<E, std::string>> names) {
  return {[get, names](const RunConfig& c) {
            const E v = get(const_cast<RunConfig&>(c));
            for (const auto& [e, s] : names) {
              if (e == v) return quote(s);
            }
            throw UsageError("unnamed enum value");
          },
          [get, names](RunConfig& c, const YAML::Node& n) {
            const auto s = scalar_as<std::string>(n, "a name");
            std::string valid;
            for (const auto& [e, name] : names) {
              if (name == s) {
                get(c) = e;
                return;
              }
              valid += (valid.empty() ? "" : ", ") + name;
            }
            throw ConfigError(fmt::format("unknown value '{}'; valid: {}", s, valid));
          }};
}

Codec schedule_codec() {
  return {[](const RunConfig& c) {
            std::string s = "[";
            for (const auto& item : c.train_schedule) {
              s += fmt::format("{}{{scenario: {}, steps: {}}}", s.size() > 1 ? ", " : "", quote(item.scenario),
                               item.steps);
            }
            return s + "]";
          },
          [](RunConfig& c, const YAML::Node& n) {
            if (!n.IsSequence()) throw ConfigError("expected a list of {scenario, steps} maps");
            std::vector<ScheduleItem> out;
            for (const auto& item : n) {
              if (!item.IsMap()) throw ConfigError("expected a {scenario, steps} map");
              ScheduleItem s;
              for (const auto& kv : item) {
                const auto key = kv.first.as<std::string>();
                if (key == "scenario") {
                  s.scenario = scalar_as<std::string>(kv.second, "a scenario name");
                } else if (key == "steps") {
                  s.steps = scalar_as<std::uint64_t>(kv.second, "a step count");
                } else {
                  throw ConfigError(fmt::format("unknown schedule key '{}'", key));
                }
              }
              out.push_back(s);
            }
            c.train_schedule = out;
          }};
}

// ---------------------------------------------------------------------------
// Field registry

struct Field {
  std::string path;
  std::string doc;
  Codec codec;
};

#define PF_REF(expr) [](RunConfig& c) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    auto add = [&](std::string path, std::string doc, Codec codec) {
      v.push_back({std::move(path), std::move(doc), std::move(codec)});
    };
    add("master_seed", "root of every random stream", integer(PF_REF(c.master_seed)));
    add("output_dir", "results directory (PADFALL_OUT overrides)", text(PF_REF(c.output_dir)));
    add("workers", "parallel evaluation episodes; results do not depend on it", integer(PF_REF(c.workers)));

    add("sim.physics_dt", "s", real(PF_REF(c.env.sim.physics_dt)));
    add("sim.control_period", "s, integer multiple of physics_dt", real(PF_REF(c.env.sim.control_period)));
    add("sim.gravity", "m/s^2", real(PF_REF(c.env.sim.gravity)));
    add("sim.world_min", "world box lower corner, m", vec3(PF_REF(c.env.sim.world_bounds.min)));
    add("sim.world_max", "world box upper corner, m", vec3(PF_REF(c.env.sim.world_bounds.max)));
    add("sim.ground_effect.enabled", "thrust boost close above the pad", boolean(PF_REF(c.env.sim.ground_effect.enabled)));
    add("sim.ground_effect.coeff", "k in 1 + k (r / 4h)^2", real(PF_REF(c.env.sim.ground_effect.coeff)));
    add("sim.ground_effect.rotor_radius", "m", real(PF_REF(c.env.sim.ground_effect.rotor_radius)));
    add("sim.ground_effect.height", "active below this height above the pad, m", real(PF_REF(c.env.sim.ground_effect.height)));

    add("drone.mass", "kg", real(PF_REF(c.env.drone.mass)));
    add("drone.inertia_diag", "kg m^2", vec3(PF_REF(c.env.drone.inertia_diag)));
    add("drone.max_total_thrust", "N", real(PF_REF(c.env.drone.max_total_thrust)));
    add("drone.linear_drag_coeff", "N s/m per axis", vec3(PF_REF(c.env.drone.linear_drag_coeff)));
    add("drone.attitude_time_constant", "s", real(PF_REF(c.env.drone.attitude_time_constant)));
    add("drone.max_tilt", "rad", real(PF_REF(c.env.drone.max_tilt)));
    add("drone.attitude_loop", "false: thrust stays vertical", boolean(PF_REF(c.env.drone.attitude_loop)));
    add("drone.pid.kp", "N/m per axis", vec3(PF_REF(c.env.drone.pid.kp)));
    add("drone.pid.ki", "N/(m s) per axis", vec3(PF_REF(c.env.drone.pid.ki)));
    add("drone.pid.kd", "N s/m per axis", vec3(PF_REF(c.env.drone.pid.kd)));
    add("drone.pid.integrator_limit", "m s", real(PF_REF(c.env.drone.pid.integrator_limit)));

    add("episode.max_duration", "s", real(PF_REF(c.env.episode.max_duration)));
    add("episode.spawn_min", "spawn box lower corner relative to the pad, m", vec3(PF_REF(c.env.episode.spawn_region.min)));
    add("episode.spawn_max", "spawn box upper corner relative to the pad, m", vec3(PF_REF(c.env.episode.spawn_region.max)));
    add("episode.success_xy_tolerance", "m", real(PF_REF(c.env.episode.success_xy_tolerance)));
    add("episode.touchdown_height", "m above the pad surface", real(PF_REF(c.env.episode.touchdown_height)));
    add("episode.max_touchdown_speed", "m/s relative to the pad", real(PF_REF(c.env.episode.max_touchdown_speed)));
    add("episode.out_of_bounds_distance", "m from the pad", real(PF_REF(c.env.episode.out_of_bounds_distance)));
    add("episode.below_floor_margin", "m below the pad surface", real(PF_REF(c.env.episode.below_floor_margin)));
    add("episode.action_scale", "setpoint offset per unit action, m", real(PF_REF(c.env.episode.action_scale)));
    add("episode.ternary_actions", "snap actions to {-1, 0, 1}", boolean(PF_REF(c.env.episode.ternary_actions)));

    add("observation.theta", "rad", real(PF_REF(c.env.ranges.theta)));
    add("observation.v_xy", "m/s", real(PF_REF(c.env.ranges.v_xy)));
    add("observation.v_z", "m/s", real(PF_REF(c.env.ranges.v_z)));
    add("observation.omega", "rad/s", real(PF_REF(c.env.ranges.omega)));
    add("observation.d", "m", real(PF_REF(c.env.ranges.d)));
    add("observation.delta_v", "m/s", real(PF_REF(c.env.ranges.delta_v)));

    add("platform.origin", "pad start, m", vec3(PF_REF(c.platform.origin)));
    add("platform.speed", "m/s for moving scenarios", real(PF_REF(c.platform.speed)));
    add("platform.direction_change_interval", "s", real(PF_REF(c.platform.direction_change_interval)));
    add("platform.region_min", "m", vec3(PF_REF(c.platform.waypoint_region.min)));
    add("platform.region_max", "m", vec3(PF_REF(c.platform.waypoint_region.max)));
    add("platform.curvature_min", "1/m", real(PF_REF(c.platform.curvature_min)));
    add("platform.curvature_max", "1/m", real(PF_REF(c.platform.curvature_max)));
    add("platform.z_amplitude", "m", real(PF_REF(c.platform.z_amplitude)));
    add("platform.z_period", "s", real(PF_REF(c.platform.z_period)));
    add("platform.half_extent", "m", real(PF_REF(c.platform.half_extent)));

    add("wind.gust_p_episode", "windy-episode probability in wind scenarios (others are calm)", real(PF_REF(c.gusts.p_episode)));
    add("wind.gust_p_step", "gust probability per decision step", real(PF_REF(c.gusts.p_step)));
    add("wind.gust_component_range", "N, each component uniform in +-range", real(PF_REF(c.gusts.component_range)));
    add("wind.impeller_offset", "fan position relative to the pad, m", vec3(PF_REF(c.impeller.origin_offset)));
    add("wind.impeller_jet_radius", "m", real(PF_REF(c.impeller.jet_radius)));
    add("wind.impeller_falloff_length", "m", real(PF_REF(c.impeller.axial_falloff_length)));
    add("wind.impeller_4500", "jet force at the fan, N", real(PF_REF(c.impeller_levels.rpm_4500)));
    add("wind.impeller_8500", "jet force at the fan, N", real(PF_REF(c.impeller_levels.rpm_8500)));
    add("wind.active_threshold", "N, mean applied force marking a step as windy", real(PF_REF(c.env.wind_active_threshold)));

    add("reward.gamma", "far-field argument", real(PF_REF(c.env.reward.gamma)));
    add("reward.alpha", "progress scale, 1/m", real(PF_REF(c.env.reward.alpha)));
    add("reward.beta", "below-pad and edge penalty", real(PF_REF(c.env.reward.beta_penalty)));
    add("reward.zeta", "attractive strength, 1/m^2", real(PF_REF(c.env.reward.zeta)));
    add("reward.eta", "repulsive strength", real(PF_REF(c.env.reward.eta)));
    add("reward.q_max", "repulsive range, m", real(PF_REF(c.env.reward.q_max)));
    add("reward.far_threshold", "m", real(PF_REF(c.env.reward.far_threshold)));
    add("reward.near_threshold", "m", real(PF_REF(c.env.reward.near_threshold)));
    add("reward.speed_coeff", "s/m", real(PF_REF(c.env.reward.speed_coeff)));
    add("reward.edge_margin", "m", real(PF_REF(c.env.reward.edge_margin)));
    add("reward.shaping", "progress | literal",
        enumeration<ShapingMode>(PF_REF(c.env.reward.shaping),
                                 {{ShapingMode::kProgress, "progress"}, {ShapingMode::kLiteral, "literal"}}));

    add("neural.hidden_dims", "actor and critic hidden widths", int_list(PF_REF(c.td3.hidden_dims)));
    add("neural.adam_beta1", "", real(PF_REF(c.td3.adam.beta1)));
    add("neural.adam_beta2", "", real(PF_REF(c.td3.adam.beta2)));
    add("neural.adam_epsilon", "", real(PF_REF(c.td3.adam.epsilon)));

    add("td3.buffer_size", "transitions", integer(PF_REF(c.td3.buffer_size)));
    add("td3.batch_size", "", integer(PF_REF(c.td3.batch_size)));
    add("td3.learning_starts", "uniform random actions before this step", integer(PF_REF(c.td3.learning_starts)));
    add("td3.discount", "", real(PF_REF(c.td3.discount)));
    add("td3.tau", "soft update rate", real(PF_REF(c.td3.tau)));
    add("td3.policy_delay", "critic updates per actor update", integer(PF_REF(c.td3.policy_delay)));
    add("td3.target_noise_std", "", real(PF_REF(c.td3.target_noise_std)));
    add("td3.target_noise_clip", "", real(PF_REF(c.td3.target_noise_clip)));
    add("td3.exploration_noise_std", "", real(PF_REF(c.td3.exploration_noise_std)));
    add("td3.actor_learning_rate", "initial rate", real(PF_REF(c.td3.actor_learning_rate)));
    add("td3.critic_learning_rate", "initial rate", real(PF_REF(c.td3.critic_learning_rate)));
    add("td3.lr_schedule", "constant | linear",
        enumeration<LrSchedule>(PF_REF(c.td3.lr_schedule),
                                {{LrSchedule::kConstant, "constant"}, {LrSchedule::kLinear, "linear"}}));
    add("td3.lr_final_fraction", "floor of the linear schedule", real(PF_REF(c.td3.lr_final_fraction)));
    add("td3.eval_interval", "steps between evaluations", integer(PF_REF(c.td3.eval_interval)));
    add("td3.eval_episodes", "noise-free episodes per evaluation", integer(PF_REF(c.td3.eval_episodes)));
    add("td3.checkpoint_interval", "steps between checkpoints, 0 = final only", integer(PF_REF(c.td3.checkpoint_interval)));

    add("baseline.kp", "setpoint offset per m of pursuit error", real(PF_REF(c.baseline.kp)));
    add("baseline.ki", "", real(PF_REF(c.baseline.ki)));
    add("baseline.kd", "", real(PF_REF(c.baseline.kd)));
    add("baseline.integrator_limit", "m s", real(PF_REF(c.baseline.integrator_limit)));
    add("baseline.lookahead_horizon", "s", real(PF_REF(c.baseline.lookahead_horizon)));
    add("baseline.descend_trigger_radius", "m", real(PF_REF(c.baseline.descend_trigger_radius)));
    add("baseline.descent_rate", "m/s", real(PF_REF(c.baseline.descent_rate)));
    add("baseline.envelope", "max setpoint offset per decision, m", real(PF_REF(c.baseline.envelope)));
    add("baseline.dt_factor", "filter step, s (1 gives the unit-step matrix)", real(PF_REF(c.baseline.dt_factor)));
    add("baseline.q_pos", "process variance, position", real(PF_REF(c.baseline.q_pos)));
    add("baseline.q_vel", "process variance, velocity", real(PF_REF(c.baseline.q_vel)));
    add("baseline.r_meas", "measurement variance, m^2", real(PF_REF(c.baseline.r_meas)));

    add("scenarios.episodes", "episodes per evaluated scenario", integer(PF_REF(c.episodes_per_scenario)));
    add("scenarios.eval", "scenarios run by eval and bench", name_list(PF_REF(c.eval_scenarios)));

    add("training.total_steps", "decision steps", integer(PF_REF(c.total_steps)));
    add("training.schedule", "consecutive (scenario, steps) blocks; the last one continues", schedule_codec());
    add("training.eval_scenario", "scenario used by periodic evaluation", text(PF_REF(c.train_eval_scenario)));
    return v;
  }();
  return f;
}

#undef PF_REF

const Field* find_field(const std::string& path) {
  for (const auto& f : fields()) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

bool is_section(const std::string& prefix) {
  for (const auto& f : fields()) {
    if (f.path.rfind(prefix + ".", 0) == 0) return true;
  }
  return false;
}

void apply_field(RunConfig& c, const Field& f, const YAML::Node& n) {
  try {
    f.codec.load(c, n);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", f.path, e.what()));
  }
}

void load_map(RunConfig& c, const YAML::Node& node, const std::string& prefix) {
  for (const auto& kv : node) {
    if (!kv.first.IsScalar()) throw ConfigError(fmt::format("{}: keys must be scalars", prefix.empty() ? "<root>" : prefix));
    const std::string key = kv.first.Scalar();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (const Field* f = find_field(path)) {
      apply_field(c, *f, kv.second);
    } else if (is_section(path)) {
      if (!kv.second.IsMap()) throw ConfigError(fmt::format("{}: expected a section", path));
      load_map(c, kv.second, path);
    } else {
      throw ConfigError(fmt::format("{}: unknown key", path));
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config is not valid YAML: {}", e.what()));
  }
  RunConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw ConfigError("config root must be a mapping");
  load_map(c, root, "");
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot read config {}", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& config) {
  std::string out = "# padfall run configuration. Every key is optional; omitted keys take the value shown.\n";
  std::vector<std::string> open;
  for (const auto& f : fields()) {
    std::vector<std::string> parts;
    std::stringstream ss(f.path);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    const std::vector<std::string> sections(parts.begin(), parts.end() - 1);
    std::size_t common = 0;
    while (common < open.size() && common < sections.size() && open[common] == sections[common]) ++common;
    for (std::size_t i = common; i < sections.size(); ++i) {
      if (i == 0) out += '\n';
      out += std::string(2 * i, ' ') + sections[i] + ":\n";
    }
    open = sections;
    const std::string indent(2 * sections.size(), ' ');
    out += indent + parts.back() + ": " + f.codec.emit(config);
    if (!f.doc.empty()) out += "  # " + f.doc;
    out += '\n';
  }
  return out;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("override '{}': expected key=value", assignment));
  const std::string key = assignment.substr(0, eq);
  const Field* f = find_field(key);
  if (!f) throw ConfigError(fmt::format("{}: unknown key", key));
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: unparseable value: {}", key, e.what()));
  }
  apply_field(config, *f, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.path);
  return keys;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a64(emit_config(config)); }

}  // namespace padfall
