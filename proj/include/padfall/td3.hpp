#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "padfall/env.hpp"
#include "padfall/neural.hpp"

namespace padfall {

using ObsVectorF = Eigen::Matrix<float, kObservationDim, 1>;
using ActionVectorF = Eigen::Matrix<float, kActionDim, 1>;

struct Transition {
  ObsVectorF obs = ObsVectorF::Zero();
  ActionVectorF action = ActionVectorF::Zero();
  float reward = 0.0f;
  ObsVectorF next_obs = ObsVectorF::Zero();
  bool done = false;  ///< true only for terminal outcomes, never for timeouts

  bool operator==(const Transition&) const = default;
};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  /// Raw slot access, as addressed by sample indices.
  const Transition& slot(std::size_t i) const { return storage_[i]; }

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
};

struct Batch {
  MatrixT<float> obs;       ///< 15 x B
  MatrixT<float> action;    ///< 3 x B
  MatrixT<float> reward;    ///< 1 x B
  MatrixT<float> next_obs;  ///< 15 x B
  MatrixT<float> done;      ///< 1 x B, 1 for terminal
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return obs.cols(); }
  static Batch from(const std::vector<Transition>& transitions);
};

/// Uniform with-replacement draw. Returns nullopt (not ready) while the buffer
/// holds fewer than `min_size` transitions or is empty.
std::optional<Batch> sample_batch(const ReplayBuffer& buffer, RngStream& rng, std::size_t batch_size,
                                  std::size_t min_size = 1);

enum class LrSchedule { kConstant, kLinear };

struct TD3Config {
  std::size_t buffer_size = 1'000'000;
  std::size_t batch_size = 100;
  std::size_t learning_starts = 100;
  double discount = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double target_noise_std = 0.2;
  double target_noise_clip = 0.5;
  double exploration_noise_std = 0.1;
  double actor_learning_rate = 1e-4;
  double critic_learning_rate = 1e-4;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  /// Lower bound of a linear schedule, as a fraction of the initial rate.
  double lr_final_fraction = 0.0;
  std::vector<int> hidden_dims{512, 512, 256, 128};
  AdamConfig adam;
  std::uint64_t eval_interval = 10'000;
  int eval_episodes = 20;
  /// Save a checkpoint every this many steps (0: only the final one).
  std::uint64_t checkpoint_interval = 0;

  void validate() const;
};

/// Actor, twin critics, their targets, and one optimizer per online network.
struct Td3Networks {
  MlpSpec actor_spec;
  MlpSpec critic_spec;
  ParamSet actor, critic1, critic2;
  ParamSet actor_target, critic1_target, critic2_target;
  AdamState actor_opt, critic1_opt, critic2_opt;

  static Td3Networks create(const TD3Config& cfg, RngStream& rng);
};

/// y = r + discount * (1 - done) * min(Q1', Q2')(s', clamp(pi'(s') + eps, -1, 1)),
/// eps ~ N(0, target_noise_std) clipped to +-target_noise_clip. Returns 1 x B.
MatrixT<float> critic_targets(const Batch& batch, const ParamSet& target_actor, const ParamSet& target_critic1,
                              const ParamSet& target_critic2, const MlpSpec& actor_spec, const MlpSpec& critic_spec,
                              const TD3Config& cfg, RngStream& rng);

/// Critic input rows: observation then action.
MatrixT<float> critic_input(const MatrixT<float>& obs, const MatrixT<float>& action);

struct CriticLoss {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double mean() const { return 0.5 * (critic1 + critic2); }
};

/// One Adam step per critic on mean((Q(s,a) - y)^2). The reported losses are
/// evaluated before the step.
CriticLoss update_critics(Td3Networks& nets, const Batch& batch, const MatrixT<float>& targets,
                          double learning_rate = -1.0);

/// When step_index % policy_delay == 0: one actor step ascending mean Q1(s, pi(s)),
/// then soft updates of all three target networks. Returns the actor loss
/// (-mean Q1) when the update ran.
std::optional<double> update_actor_and_targets(Td3Networks& nets, const Batch& batch, const TD3Config& cfg,
                                               std::uint64_t step_index, double learning_rate = -1.0);

/// Deterministic policy output for one normalized observation.
Vec3 policy_action(const ParamSet& actor, const MlpSpec& spec, const Observation& normalized_obs);

struct TrainingLogRow {
  std::uint64_t step = 0;
  double mean_eval_reward = 0.0;
  double mean_episode_length = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double eval_success_rate = 0.0;  ///< kept alongside the CSV columns for callers

  bool operator==(const TrainingLogRow&) const = default;
};

std::string training_log_csv(const std::vector<TrainingLogRow>& rows);

/// Contiguous blocks of training steps, each drawing episodes from one scenario.
struct ScheduleEntry {
  ScenarioSpec scenario;
  std::uint64_t steps = 0;
};

struct TrainOptions {
  std::uint64_t total_steps = 0;
  std::uint64_t master_seed = 0;
  int workers = 1;  ///< parallel evaluation episodes; never changes results
  /// Periodic evaluation scenario; defaults to the current schedule block.
  std::optional<ScenarioSpec> eval_scenario;
  /// When set, checkpoints and the training log are written here.
  std::string output_dir;
  /// Called after each evaluation with the fresh log row.
  std::function<void(const TrainingLogRow&)> on_eval;
};

struct TrainingResult {
  Td3Networks networks;
  std::vector<TrainingLogRow> log;
  std::uint64_t steps_done = 0;
  std::uint64_t updates = 0;
  std::uint64_t episodes = 0;
};

/// Runs noise-free evaluation episodes and returns (mean return, mean length, success rate).
struct EvalSummary {
  double mean_return = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
};
EvalSummary evaluate_policy(const EnvSettings& settings, const ScenarioSpec& scenario, const ParamSet& actor,
                            const MlpSpec& spec, std::uint64_t master_seed, int episodes, int workers);

/// Throws NumericalFailure when a loss becomes non-finite.
TrainingResult train(const EnvSettings& settings, const std::vector<ScheduleEntry>& schedule, const TD3Config& cfg,
                     const TrainOptions& options);

/// Writes actor/critic checkpoints into `dir`.
void save_networks(const std::string& dir, const Td3Networks& nets);

}  // namespace padfall
