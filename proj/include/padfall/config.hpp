#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "padfall/ekf.hpp"
#include "padfall/env.hpp"
#include "padfall/td3.hpp"

namespace padfall {

struct ScheduleItem {
  std::string scenario;
  std::uint64_t steps = 0;

  bool operator==(const ScheduleItem&) const = default;
};

/// Everything a run needs. Loaded from YAML; every field has a default.
struct RunConfig {
  std::uint64_t master_seed = 0;
  std::string output_dir = "runs/default";
  int workers = 1;

  EnvSettings env;
  /// Shape of every scenario's pad trajectory; kind comes from the scenario name.
  TrajectorySpec platform;
  GustConfig gusts;
  ImpellerSpec impeller;
  ImpellerLevels impeller_levels;
  TD3Config td3;
  BaselineConfig baseline;

  int episodes_per_scenario = 15;
  std::vector<std::string> eval_scenarios{"SPL", "LMPL", "CMPL", "CTL"};
  std::uint64_t total_steps = 500'000;
  std::vector<ScheduleItem> train_schedule{{"SPL", 500'000}};
  std::string train_eval_scenario = "SPL";

  RunConfig();

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// A named scenario with this config's platform and wind settings applied.
  ScenarioSpec scenario(const std::string& name) const;
  std::vector<ScheduleEntry> schedule() const;
};

/// Parses YAML text. Unknown keys and malformed values raise ConfigError
/// with the dotted field path.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

/// Commented reference YAML; parse_config(emit_config(c)) reproduces c exactly.
std::string emit_config(const RunConfig& config);

/// Applies "a.b.c=value" where value is a YAML scalar or flow sequence.
void apply_override(RunConfig& config, const std::string& assignment);

/// Dotted paths of every field, in emission order.
std::vector<std::string> config_keys();

/// FNV-1a of the emitted config text.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace padfall
