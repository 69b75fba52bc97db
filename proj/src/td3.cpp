#include "padfall/td3.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "padfall/parallel.hpp"

namespace padfall {

namespace fs = std::filesystem;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(const Transition& t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(t);
  } else {
    storage_[cursor_] = t;
  }
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay buffer index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : cursor_;
  return storage_[(oldest + i) % capacity_];
}

Batch Batch::from(const std::vector<Transition>& transitions) {
  const auto n = static_cast<Eigen::Index>(transitions.size());
  Batch b;
  b.obs.resize(kObservationDim, n);
  b.action.resize(kActionDim, n);
  b.reward.resize(1, n);
  b.next_obs.resize(kObservationDim, n);
  b.done.resize(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = transitions[static_cast<std::size_t>(i)];
    b.obs.col(i) = t.obs;
    b.action.col(i) = t.action;
    b.reward(0, i) = t.reward;
    b.next_obs.col(i) = t.next_obs;
    b.done(0, i) = t.done ? 1.0f : 0.0f;
  }
  return b;
}

std::optional<Batch> sample_batch(const ReplayBuffer& buffer, RngStream& rng, std::size_t batch_size,
                                  std::size_t min_size) {
  if (buffer.size() == 0 || buffer.size() < min_size || batch_size == 0) return std::nullopt;
  std::vector<Transition> picked;
  picked.reserve(batch_size);
  std::vector<std::size_t> indices;
  indices.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t idx = rng.index(buffer.size());
    indices.push_back(idx);
    picked.push_back(buffer.slot(idx));
  }
  Batch b = Batch::from(picked);
  b.indices = std::move(indices);
  return b;
}

void TD3Config::validate() const {
  if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("td3.discount must be in (0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("td3.tau must be in (0, 1]");
  if (policy_delay < 1) throw ConfigError("td3.policy_delay must be >= 1");
  if (batch_size < 1) throw ConfigError("td3.batch_size must be >= 1");
  if (buffer_size < 1) throw ConfigError("td3.buffer_size must be >= 1");
  if (!(target_noise_std >= 0.0 && target_noise_clip >= 0.0 && exploration_noise_std >= 0.0)) {
    throw ConfigError("td3 noise parameters must be >= 0");
  }
  if (!(actor_learning_rate > 0.0 && critic_learning_rate > 0.0)) throw ConfigError("learning rates must be > 0");
  if (!(lr_final_fraction >= 0.0 && lr_final_fraction <= 1.0)) {
    throw ConfigError("td3.lr_final_fraction must be in [0, 1]");
  }
  if (eval_episodes < 0) throw ConfigError("td3.eval_episodes must be >= 0");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("neural.hidden_dims entries must be >= 1");
  }
}

Td3Networks Td3Networks::create(const TD3Config& cfg, RngStream& rng) {
  Td3Networks n;
  n.actor_spec = padfall::actor_spec(kObservationDim, kActionDim, cfg.hidden_dims);
  n.critic_spec = padfall::critic_spec(kObservationDim, kActionDim, cfg.hidden_dims);
  n.actor = init_params(n.actor_spec, rng);
  n.critic1 = init_params(n.critic_spec, rng);
  n.critic2 = init_params(n.critic_spec, rng);
  n.actor_target = n.actor;
  n.critic1_target = n.critic1;
  n.critic2_target = n.critic2;
  AdamConfig actor_adam = cfg.adam;
  actor_adam.learning_rate = cfg.actor_learning_rate;
  AdamConfig critic_adam = cfg.adam;
  critic_adam.learning_rate = cfg.critic_learning_rate;
  n.actor_opt = AdamState::for_params(n.actor, actor_adam);
  n.critic1_opt = AdamState::for_params(n.critic1, critic_adam);
  n.critic2_opt = AdamState::for_params(n.critic2, critic_adam);
  return n;
}

MatrixT<float> critic_input(const MatrixT<float>& obs, const MatrixT<float>& action) {
  MatrixT<float> x(obs.rows() + action.rows(), obs.cols());
  x << obs, action;
  return x;
}

MatrixT<float> critic_targets(const Batch& batch, const ParamSet& target_actor, const ParamSet& target_critic1,
                              const ParamSet& target_critic2, const MlpSpec& actor_spec, const MlpSpec& critic_spec,
                              const TD3Config& cfg, RngStream& rng) {
  MatrixT<float> next_action = forward(target_actor, actor_spec, batch.next_obs);
  if (cfg.target_noise_std > 0.0) {
    for (Eigen::Index c = 0; c < next_action.cols(); ++c) {
      for (Eigen::Index r = 0; r < next_action.rows(); ++r) {
        const double eps = std::clamp(rng.normal(0.0, cfg.target_noise_std), -cfg.target_noise_clip,
                                      cfg.target_noise_clip);
        next_action(r, c) += static_cast<float>(eps);
      }
    }
  }
  next_action = next_action.cwiseMax(-1.0f).cwiseMin(1.0f);
  const MatrixT<float> x = critic_input(batch.next_obs, next_action);
  const MatrixT<float> q1 = forward(target_critic1, critic_spec, x);
  const MatrixT<float> q2 = forward(target_critic2, critic_spec, x);
  const MatrixT<float> q = q1.cwiseMin(q2);
  const auto discount = static_cast<float>(cfg.discount);
  MatrixT<float> y(1, batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    y(0, i) = batch.done(0, i) > 0.5f ? batch.reward(0, i) : batch.reward(0, i) + discount * q(0, i);
  }
  return y;
}

namespace {

double critic_step(ParamSet& critic, AdamState& opt, const MlpSpec& spec, const MatrixT<float>& x,
                   const MatrixT<float>& targets, double learning_rate) {
  ActivationCache<float> cache;
  const MatrixT<float> q = forward(critic, spec, x, &cache);
  const MatrixT<float> err = q - targets;
  const double n = static_cast<double>(err.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < err.cols(); ++i) loss += static_cast<double>(err(0, i)) * err(0, i);
  loss /= n;
  const MatrixT<float> grad_out = err * static_cast<float>(2.0 / n);
  const Gradients<float> g = backward(critic, spec, cache, grad_out);
  adam_update(critic, g.params, opt, learning_rate);
  return loss;
}

}  // namespace

CriticLoss update_critics(Td3Networks& nets, const Batch& batch, const MatrixT<float>& targets, double learning_rate) {
  const MatrixT<float> x = critic_input(batch.obs, batch.action);
  CriticLoss loss;
  loss.critic1 = critic_step(nets.critic1, nets.critic1_opt, nets.critic_spec, x, targets, learning_rate);
  loss.critic2 = critic_step(nets.critic2, nets.critic2_opt, nets.critic_spec, x, targets, learning_rate);
  return loss;
}

std::optional<double> update_actor_and_targets(Td3Networks& nets, const Batch& batch, const TD3Config& cfg,
                                               std::uint64_t step_index, double learning_rate) {
  if (step_index % static_cast<std::uint64_t>(cfg.policy_delay) != 0) return std::nullopt;

  ActivationCache<float> actor_cache;
  const MatrixT<float> action = forward(nets.actor, nets.actor_spec, batch.obs, &actor_cache);
  ActivationCache<float> critic_cache;
  const MatrixT<float> q = forward(nets.critic1, nets.critic_spec, critic_input(batch.obs, action), &critic_cache);
  const double n = static_cast<double>(q.cols());
  double mean_q = 0.0;
  for (Eigen::Index i = 0; i < q.cols(); ++i) mean_q += q(0, i);
  mean_q /= n;

  // loss = -mean(Q1): dL/dq = -1/n per sample; only the action rows of the critic input gradient matter.
  const MatrixT<float> grad_q = MatrixT<float>::Constant(1, q.cols(), static_cast<float>(-1.0 / n));
  const Gradients<float> critic_grad = backward(nets.critic1, nets.critic_spec, critic_cache, grad_q);
  const MatrixT<float> grad_action = critic_grad.input.bottomRows(kActionDim);
  const Gradients<float> actor_grad = backward(nets.actor, nets.actor_spec, actor_cache, grad_action);
  adam_update(nets.actor, actor_grad.params, nets.actor_opt, learning_rate);

  soft_update(nets.actor_target, nets.actor, cfg.tau);
  soft_update(nets.critic1_target, nets.critic1, cfg.tau);
  soft_update(nets.critic2_target, nets.critic2, cfg.tau);
  return -mean_q;
}

Vec3 policy_action(const ParamSet& actor, const MlpSpec& spec, const Observation& normalized_obs) {
  const MatrixT<float> x = normalized_obs.flat().cast<float>();
  const MatrixT<float> y = forward(actor, spec, x);
  return y.col(0).cast<double>();
}

std::string training_log_csv(const std::vector<TrainingLogRow>& rows) {
  std::string out = "step,mean_eval_reward,mean_episode_length,critic_loss,actor_loss\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.step, r.mean_eval_reward, r.mean_episode_length,
                       r.critic_loss, r.actor_loss);
  }
  return out;
}

EvalSummary evaluate_policy(const EnvSettings& settings, const ScenarioSpec& scenario, const ParamSet& actor,
                            const MlpSpec& spec, std::uint64_t master_seed, int episodes, int workers) {
  EvalSummary s;
  if (episodes <= 0) return s;
  struct Run {
    double ret = 0.0;
    int length = 0;
    bool landed = false;
  };
  std::vector<Run> runs(static_cast<std::size_t>(episodes));
  parallel_for(runs.size(), workers, [&](std::size_t i) {
    auto [state, obs] = reset_env(settings, scenario, master_seed, i);
    Run r;
    while (!state.terminated()) {
      const StepResult res = step_env(settings, state, Action{policy_action(actor, spec, obs)});
      r.ret += res.reward;
      ++r.length;
      obs = res.observation;
    }
    r.landed = state.outcome == Outcome::kLanded;
    runs[i] = r;
  });
  for (const Run& r : runs) {
    s.mean_return += r.ret;
    s.mean_length += r.length;
    s.success_rate += r.landed ? 1.0 : 0.0;
  }
  s.mean_return /= episodes;
  s.mean_length /= episodes;
  s.success_rate /= episodes;
  return s;
}

void save_networks(const std::string& dir, const Td3Networks& nets) {
  fs::create_directories(dir);
  save_checkpoint((fs::path(dir) / "actor.ckpt").string(), nets.actor_spec, nets.actor);
  save_checkpoint((fs::path(dir) / "critic1.ckpt").string(), nets.critic_spec, nets.critic1);
  save_checkpoint((fs::path(dir) / "critic2.ckpt").string(), nets.critic_spec, nets.critic2);
}

namespace {

const ScenarioSpec& scenario_for_step(const std::vector<ScheduleEntry>& schedule, std::uint64_t step) {
  std::uint64_t acc = 0;
  for (const auto& e : schedule) {
    acc += e.steps;
    if (step < acc) return e.scenario;
  }
  return schedule.back().scenario;
}

// Evaluation episodes use their own seed domain, identical at every evaluation.
constexpr std::uint64_t kEvalSeedSalt = 0x5eedf00dcafe1234ull;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError(fmt::format("cannot write {}", path.string()));
  f << text;
}

}  // namespace

TrainingResult train(const EnvSettings& settings, const std::vector<ScheduleEntry>& schedule, const TD3Config& cfg,
                     const TrainOptions& options) {
  cfg.validate();
  settings.validate();
  if (schedule.empty()) throw ConfigError("training schedule is empty");
  for (const auto& e : schedule) e.scenario.validate();

  const std::uint64_t seed = options.master_seed;
  RngStream init_rng = derive_stream(seed, 0, StreamPurpose::kInit);
  RngStream explore_rng = derive_stream(seed, 0, StreamPurpose::kExploration);
  RngStream replay_rng = derive_stream(seed, 0, StreamPurpose::kReplay);
  RngStream noise_rng = derive_stream(seed, 0, StreamPurpose::kTargetNoise);

  TrainingResult result{Td3Networks::create(cfg, init_rng), {}, 0, 0, 0};
  Td3Networks& nets = result.networks;
  ReplayBuffer buffer(cfg.buffer_size);

  if (!options.output_dir.empty()) fs::create_directories(options.output_dir);

  auto lr_scale = [&](std::uint64_t step) {
    if (cfg.lr_schedule == LrSchedule::kConstant || options.total_steps == 0) return 1.0;
    const double progress = static_cast<double>(step) / static_cast<double>(options.total_steps);
    return std::max(cfg.lr_final_fraction, 1.0 - progress);
  };

  double critic_loss_sum = 0.0, actor_loss_sum = 0.0;
  std::uint64_t critic_count = 0, actor_count = 0;

  std::optional<std::pair<EpisodeState, Observation>> episode;
  auto start_episode = [&](std::uint64_t step) {
    episode.emplace(reset_env(settings, scenario_for_step(schedule, step), seed, result.episodes));
    ++result.episodes;
  };

  for (std::uint64_t step = 0; step < options.total_steps; ++step) {
    if (!episode) start_episode(step);
    auto& [state, obs] = *episode;

    Action action;
    if (step < cfg.learning_starts) {
      for (int i = 0; i < kActionDim; ++i) action.c[i] = explore_rng.uniform(-1.0, 1.0);
    } else {
      const Vec3 mean = policy_action(nets.actor, nets.actor_spec, obs);
      for (int i = 0; i < kActionDim; ++i) action.c[i] = mean[i] + explore_rng.normal(0.0, cfg.exploration_noise_std);
      action = action.clamped();
    }

    const StepResult res = step_env(settings, state, action);
    Transition t;
    t.obs = obs.flat().cast<float>();
    t.action = action.c.cast<float>();
    t.reward = static_cast<float>(res.reward);
    t.next_obs = res.observation.flat().cast<float>();
    t.done = res.terminated && res.outcome != Outcome::kTimeout;
    buffer.push(t);
    obs = res.observation;
    if (res.terminated) episode.reset();

    if (step + 1 > cfg.learning_starts) {
      if (auto batch = sample_batch(buffer, replay_rng, cfg.batch_size, 1)) {
        const double scale = lr_scale(step);
        const MatrixT<float> y = critic_targets(*batch, nets.actor_target, nets.critic1_target, nets.critic2_target,
                                                nets.actor_spec, nets.critic_spec, cfg, noise_rng);
        const CriticLoss closs = update_critics(nets, *batch, y, cfg.critic_learning_rate * scale);
        ++result.updates;
        const auto aloss = update_actor_and_targets(nets, *batch, cfg, result.updates, cfg.actor_learning_rate * scale);
        if (!std::isfinite(closs.mean()) || (aloss && !std::isfinite(*aloss)) || !nets.actor.all_finite()) {
          const std::string diag = fmt::format(
              "non-finite training state at step {} (update {}): critic1 loss {}, critic2 loss {}, actor loss {}",
              step, result.updates, closs.critic1, closs.critic2, aloss ? *aloss : 0.0);
          if (!options.output_dir.empty()) write_text(fs::path(options.output_dir) / "diagnostic.txt", diag + "\n");
          throw NumericalFailure(diag);
        }
        critic_loss_sum += closs.mean();
        ++critic_count;
        if (aloss) {
          actor_loss_sum += *aloss;
          ++actor_count;
        }
      }
    }

    const std::uint64_t done_steps = step + 1;
    result.steps_done = done_steps;
    if (cfg.eval_interval > 0 && done_steps % cfg.eval_interval == 0) {
      const ScenarioSpec& eval_scenario =
          options.eval_scenario ? *options.eval_scenario : scenario_for_step(schedule, step);
      const EvalSummary ev = evaluate_policy(settings, eval_scenario, nets.actor, nets.actor_spec,
                                             seed ^ kEvalSeedSalt, cfg.eval_episodes, options.workers);
      TrainingLogRow row;
      row.step = done_steps;
      row.mean_eval_reward = ev.mean_return;
      row.mean_episode_length = ev.mean_length;
      row.eval_success_rate = ev.success_rate;
      row.critic_loss = critic_count ? critic_loss_sum / critic_count : 0.0;
      row.actor_loss = actor_count ? actor_loss_sum / actor_count : 0.0;
      critic_loss_sum = actor_loss_sum = 0.0;
      critic_count = actor_count = 0;
      result.log.push_back(row);
      if (options.on_eval) options.on_eval(row);
      if (!options.output_dir.empty()) {
        write_text(fs::path(options.output_dir) / "training_log.csv", training_log_csv(result.log));
      }
    }
    if (!options.output_dir.empty() && cfg.checkpoint_interval > 0 && done_steps % cfg.checkpoint_interval == 0) {
      save_networks((fs::path(options.output_dir) / "checkpoints" / fmt::format("step_{:09d}", done_steps)).string(),
                    nets);
    }
  }

  if (!options.output_dir.empty()) {
    write_text(fs::path(options.output_dir) / "training_log.csv", training_log_csv(result.log));
    save_networks((fs::path(options.output_dir) / "final").string(), nets);
  }
  return result;
}

}  // namespace padfall
