// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include "../support/gradcheck.hpp"
#include "padfall/config.hpp"
#include "padfall/ekf.hpp"
#include "padfall/eval.hpp"
#include "padfall/reward.hpp"
#include "padfall/td3.hpp"
#include "padfall/wind.hpp"

using namespace padfall;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets

constexpr int kWindEpisodes = 100'000;
constexpr int kWindStepsPerEpisode = 600;
constexpr double kRateLo = 0.19, kRateHi = 0.21;
constexpr double kForceBound = 0.005;
constexpr double kWindBudget = 10.0;

constexpr double kAntisymmetryTol = 1e-12;
constexpr double kRewardBudget = 1.0;

constexpr double kGradTol = 1e-4;
constexpr double kGradBudget = 120.0;

constexpr double kTd3Budget = 60.0;

constexpr double kDeskSuccess = 0.80;
constexpr int kDeskEvalEpisodes = 100;
constexpr std::uint64_t kDeskMaxSteps = 500'000;
constexpr std::uint64_t kHoldoutSeed = 1'000'003;

constexpr double kEkfSigma = 0.01;
constexpr double kEkfRmse = 0.01;
constexpr double kEkfVelocityFraction = 0.05;
constexpr double kEkfMinEigen = -1e-9;
constexpr double kEkfBudget = 5.0;

constexpr double kBaselineSuccess = 0.80;
constexpr int kBaselineEpisodes = 20;
constexpr std::uint64_t kBaselineSeed = 2024;
constexpr double kBaselineBudget = 120.0;

constexpr int kCompareEpisodes = 20;
constexpr std::uint64_t kCompareSeed = 4242;
constexpr double kCompareBudget = 300.0;

constexpr double kPearsonTol = 1e-10;
constexpr double kIdentityTol = 1e-12;
constexpr double kMetricsBudget = 5.0;

constexpr double kDeterminismBudget = 300.0;

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

bool within_budget(const Timer& t, double budget, std::string& detail) {
  const double s = t.seconds();
  detail += fmt::format("; runtime {:.2f} s (limit {:.0f} s)", s, budget);
  return s < budget;
}

// ---------------------------------------------------------------------------
// 2. wind gating

Verdict wind_gating() {
  Timer timer;
  const GustConfig cfg;
  std::uint64_t windy = 0, steps = 0, active = 0, violations = 0;
  for (int ep = 0; ep < kWindEpisodes; ++ep) {
    RngStream rng = derive_stream(7, static_cast<std::uint64_t>(ep), StreamPurpose::kWind);
    const bool is_windy = sample_episode_windiness(rng, cfg);
    if (!is_windy) continue;
    ++windy;
    for (int k = 0; k < kWindStepsPerEpisode; ++k) {
      const Vec3 f = gust_force_at_step(rng, true, cfg);
      ++steps;
      if (!f.isZero(0.0)) ++active;
      for (int i = 0; i < 3; ++i)
        if (!(std::abs(f[i]) <= kForceBound)) ++violations;
    }
  }
  const double windy_rate = static_cast<double>(windy) / kWindEpisodes;
  const double active_rate = steps ? static_cast<double>(active) / steps : 0.0;
  Verdict v;
  v.detail = fmt::format("windy fraction {:.4f}, active step fraction {:.4f}, bound violations {}", windy_rate,
                         active_rate, violations);
  v.pass = windy_rate >= kRateLo && windy_rate <= kRateHi && active_rate >= kRateLo && active_rate <= kRateHi &&
           violations == 0;
  v.pass = within_budget(timer, kWindBudget, v.detail) && v.pass;
  return v;
}

// ---------------------------------------------------------------------------
// 3. reward branches

Verdict reward_branches() {
  Timer timer;
  const RewardParams p;
  bool ok = true;
  std::vector<std::string> failures;
  auto check = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures.push_back(what);
    }
  };

  RewardContext far;
  far.current_distance = 2.1;
  far.previous_distance = 2.5;
  const double r_far = compute_reward(far, p);
  for (double d : {2.1, 3.0, 10.0}) {
    RewardContext c;
    c.current_distance = d;
    c.previous_distance = d + 0.3;
    check(compute_reward(c, p) == r_far, fmt::format("far branch at R={}", d));
  }

  RngStream rng(3);
  double worst = 0.0;
  for (int k = 0; k < 10'000; ++k) {
    RewardContext a;
    a.previous_distance = rng.uniform(0.1001, 2.0);
    a.current_distance = rng.uniform(0.1001, 2.0);
    RewardContext b = a;
    std::swap(b.previous_distance, b.current_distance);
    worst = std::max(worst, std::abs(compute_reward(a, p) + compute_reward(b, p)));
  }
  check(worst <= kAntisymmetryTol, fmt::format("antisymmetry {:.3g}", worst));

  for (double s : {0.5, 0.75, 1.0, 5.0}) check(repulsive_potential(s, 1.0, 0.5) == 0.0, "U_rep zero branch");
  check(repulsive_potential(0.25, 1.0, 0.5) == 2.0, "U_rep(0.25)");

  for (int k = 0; k < 1000; ++k) {
    RewardContext c;
    c.current_distance = rng.uniform(0.0, 0.0999);
    c.previous_distance = c.current_distance;
    c.relative_velocity = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double base = compute_reward(c, p);
    RewardContext below = c, edge = c;
    below.drone_below_pad_surface = true;
    edge.near_pad_edge = true;
    check(compute_reward(below, p) < base && compute_reward(edge, p) < base, "safety penalty");
    if (!ok) break;
  }

  double lo = 1.0, hi = -1.0;
  for (int k = 0; k < 100'000; ++k) {
    RewardContext c;
    c.current_distance = rng.uniform(0.0, 4.0);
    c.previous_distance = std::max(0.0, c.current_distance + rng.uniform(-0.2, 0.2));
    c.nearest_obstacle_distance = rng.uniform() < 0.5 ? rng.uniform(0.01, 1.0)
                                                      : std::numeric_limits<double>::infinity();
    c.relative_velocity = Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    c.drone_below_pad_surface = rng.uniform() < 0.2;
    c.near_pad_edge = rng.uniform() < 0.2;
    const double r = compute_reward(c, p);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (!(r > -1.0 && r < 1.0)) {
      check(false, fmt::format("output {} out of (-1, 1)", r));
      break;
    }
  }

  Verdict v;
  v.detail = fmt::format("antisymmetry max {:.2g}, output range [{:.6f}, {:.6f}]", worst, lo, hi);
  for (const auto& f : failures) v.detail += "; failed: " + f;
  v.pass = within_budget(timer, kRewardBudget, v.detail) && ok;
  return v;
}

// ---------------------------------------------------------------------------
// 4. gradients

Verdict gradients() {
  Timer timer;
  struct Arch {
    MlpSpec spec;
    int batch;
    std::size_t max_params;
  };
  const std::vector<Arch> archs{
      {actor_spec(kObservationDim, kActionDim, {16, 16}), 8, 0},
      {critic_spec(kObservationDim, kActionDim, {32, 16}), 8, 0},
      {actor_spec(kObservationDim, kActionDim, {512, 512, 256, 128}), 2, 1500},
  };
  double worst = 0.0;
  int checked = 0, skipped = 0;
  for (const Arch& a : archs) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      RngStream init = derive_stream(seed, 0, StreamPurpose::kInit);
      const ParamSet params = init_params(a.spec, init);
      RngStream rng(seed * 7919);
      const auto r = testing::gradient_check(a.spec, params, a.batch, rng, a.max_params);
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      skipped += r.skipped_kinks;
    }
  }
  Verdict v;
  v.detail = fmt::format("max relative error {:.3g} over {} derivatives ({} kink-crossing skipped)", worst, checked,
                         skipped);
  v.pass = within_budget(timer, kGradBudget, v.detail) && worst < kGradTol && checked > 0;
  return v;
}

// ---------------------------------------------------------------------------
// 5. TD3 mechanics

ParamSet constant_net(const MlpSpec& spec, float value) {
  ParamSet p = ParamSet::zeros_like(spec);
  p.layers.back().bias.setConstant(value);
  return p;
}

TD3Config small_td3() {
  TD3Config cfg;
  cfg.hidden_dims = {8};
  cfg.buffer_size = 10'000;
  cfg.batch_size = 16;
  cfg.learning_starts = 50;
  cfg.eval_interval = 250;
  cfg.eval_episodes = 2;
  return cfg;
}

Verdict td3_mechanics() {
  Timer timer;
  std::vector<std::string> failures;
  const TD3Config defaults;
  const MlpSpec a = actor_spec(kObservationDim, kActionDim, {4});
  const MlpSpec c = critic_spec(kObservationDim, kActionDim, {4});

  Transition t0, t1;
  t0.reward = 0.5f;
  t0.done = true;
  t0.obs.setConstant(0.5f);
  t0.next_obs.setConstant(0.1f);
  t1.reward = -1.25f;
  t1.obs.setConstant(-1.25f);
  t1.next_obs.setConstant(-0.2f);
  const Batch batch = Batch::from({t0, t1});
  RngStream rng(5);

  const auto y = critic_targets(batch, constant_net(a, 0.3f), constant_net(c, 3), constant_net(c, 5), a, c, defaults,
                                rng);
  if (y(0, 0) != 0.5f) failures.push_back("terminal target");

  for (bool swap : {false, true}) {
    const auto yy = critic_targets(batch, constant_net(a, 0.0f), constant_net(c, swap ? 5 : 3),
                                   constant_net(c, swap ? 3 : 5), a, c, defaults, rng);
    if (yy(0, 1) != -1.25f + 0.99f * 3.0f) failures.push_back("twin minimum");
  }

  const MlpSpec one{1, {}, 1, OutputActivation::kLinear};
  for (double tau : {0.005, 0.25, 0.5, 1.0}) {
    ParamSet target = ParamSet::zeros_like(one), source = ParamSet::zeros_like(one);
    target.layers[0].weight(0, 0) = 0.8f;
    source.layers[0].weight(0, 0) = -0.4f;
    const float t = static_cast<float>(tau);
    const float expect = t * -0.4f + (1.0f - t) * 0.8f;
    soft_update(target, source, tau);
    if (target.layers[0].weight(0, 0) != expect) failures.push_back(fmt::format("tau blend at {}", tau));
  }

  TD3Config cfg = small_td3();
  RngStream net_rng(10);
  Td3Networks nets = Td3Networks::create(cfg, net_rng);
  for (std::uint64_t step = 1; step <= 6; ++step) {
    const ParamSet prev = nets.actor;
    const bool ran = update_actor_and_targets(nets, batch, cfg, step).has_value();
    const bool changed = !nets.actor.same_values(prev);
    const bool due = step % static_cast<std::uint64_t>(cfg.policy_delay) == 0;
    if (ran != due || changed != due) failures.push_back(fmt::format("delayed gate at step {}", step));
  }

  TrainOptions opt;
  opt.total_steps = 1000;
  opt.master_seed = 21;
  const ScheduleEntry block{ScenarioSpec{}, 1000};
  const TrainingResult r1 = train(EnvSettings{}, {block}, cfg, opt);
  const TrainingResult r2 = train(EnvSettings{}, {block}, cfg, opt);
  if (!(r1.log == r2.log) || !r1.networks.actor.same_values(r2.networks.actor) ||
      !r1.networks.critic1.same_values(r2.networks.critic1) ||
      encode_checkpoint(r1.networks.actor_spec, r1.networks.actor) !=
          encode_checkpoint(r2.networks.actor_spec, r2.networks.actor))
    failures.push_back("1000-step run reproducibility");

  Verdict v;
  v.detail = fmt::format("{} training updates, {} log rows", r1.updates, r1.log.size());
  for (const auto& f : failures) v.detail += "; failed: " + f;
  v.pass = within_budget(timer, kTd3Budget, v.detail) && failures.empty();
  return v;
}

// ---------------------------------------------------------------------------
// 6. desk-scale learning

struct DeskRun {
  std::optional<TrainingResult> result;
  RunConfig config;
};

DeskRun& desk_run() {
  static DeskRun run;
  return run;
}

ControllerFactory policy_factory(const Td3Networks& nets) {
  auto actor = std::make_shared<const ParamSet>(nets.actor);
  const MlpSpec spec = nets.actor_spec;
  return [actor, spec] { return std::make_unique<PolicyController>(actor, spec); };
}

Verdict desk_learning() {
  Timer timer;
  Verdict v;
  const fs::path cfg_path = fs::path(PADFALL_SOURCE_DIR) / "configs" / "desk_spl.yaml";
  RunConfig cfg = load_config(cfg_path.string());
  cfg.workers = workers();
  if (cfg.total_steps > kDeskMaxSteps) {
    v.detail = fmt::format("recipe asks for {} steps, limit {}", cfg.total_steps, kDeskMaxSteps);
    return v;
  }

  const fs::path out = fs::current_path() / "acceptance_out" / "desk";
  fs::create_directories(out);
  TrainOptions opt;
  opt.total_steps = cfg.total_steps;
  opt.master_seed = cfg.master_seed;
  opt.workers = cfg.workers;
  opt.output_dir = out.string();
  opt.eval_scenario = cfg.scenario(cfg.train_eval_scenario);
  opt.on_eval = [](const TrainingLogRow& row) {
    std::cerr << fmt::format("  desk step {:>7}  eval reward {:8.3f}  success {}\n", row.step, row.mean_eval_reward,
                             format_percent(row.eval_success_rate));
  };
  TrainingResult result = train(cfg.env, cfg.schedule(), cfg.td3, opt);
  save_networks((out / "final").string(), result.networks);

  ScenarioSpec holdout = cfg.scenario("SPL");
  holdout.episodes = kDeskEvalEpisodes;
  holdout.master_seed = kHoldoutSeed;
  const auto records = run_scenario(cfg.env, policy_factory(result.networks), holdout, cfg.workers, "agent");
  const LandingMetrics m = landing_metrics(records);

  bool trend = result.log.size() >= 3;
  std::string last3;
  for (std::size_t i = result.log.size() >= 3 ? result.log.size() - 3 : 0; i < result.log.size(); ++i) {
    last3 += fmt::format("{}{:.4f}", last3.empty() ? "" : ", ", result.log[i].mean_eval_reward);
    if (i > result.log.size() - 3 && result.log[i].mean_eval_reward < result.log[i - 1].mean_eval_reward)
      trend = false;
  }

  v.detail = fmt::format("{} steps; held-out SPL success {} over {} episodes (need {}); final eval rewards [{}] {}",
                         result.steps_done, format_percent(m.success_rate), m.total, format_percent(kDeskSuccess),
                         last3, trend ? "non-decreasing" : "DECREASING");
  v.detail += fmt::format("; runtime {:.0f} s", timer.seconds());
  v.pass = m.success_rate >= kDeskSuccess && trend && m.total == kDeskEvalEpisodes;
  desk_run().result = std::move(result);
  desk_run().config = cfg;
  return v;
}

// ---------------------------------------------------------------------------
// 7. EKF

Verdict ekf_quality() {
  Timer timer;
  std::vector<std::string> failures;
  EkfModel unit;
  unit.dt_factor = 1.0;
  Mat6 a_ref = Mat6::Identity();
  a_ref.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
  if (unit.A() != a_ref) failures.push_back("unit-step A");

  const double dt = 1.0 / 30.0;
  EkfModel m;
  m.dt_factor = dt;
  const Vec3 p0(0.2, -0.4, 0.5), vel(0.3, -0.2, 0.1);
  RngStream noise(11);
  EkfState s = ekf_init(p0 + Vec3(0.01, 0.0, -0.01), Vec3::Zero());
  double sq = 0.0, raw_sq = 0.0, min_eig = std::numeric_limits<double>::infinity(), asym = 0.0;
  int n = 0;
  for (int k = 1; k <= 500; ++k) {
    const Vec3 truth = p0 + vel * (k * dt);
    const Vec3 z = truth + Vec3(noise.normal(0, kEkfSigma), noise.normal(0, kEkfSigma), noise.normal(0, kEkfSigma));
    s = ekf_update(ekf_predict(s, m), z, m);
    asym = std::max(asym, (s.P - s.P.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat6>(s.P).eigenvalues().minCoeff());
    if (k > 100) {
      sq += (s.x.head<3>() - truth).squaredNorm() / 3.0;
      raw_sq += (z - truth).squaredNorm() / 3.0;
      ++n;
    }
  }
  const double rmse = std::sqrt(sq / n), raw = std::sqrt(raw_sq / n);
  const double vel_err = (s.x.tail<3>() - vel).norm() / vel.norm();
  if (!(rmse < kEkfRmse && rmse < raw)) failures.push_back("position RMSE");
  if (!(vel_err < kEkfVelocityFraction)) failures.push_back("velocity");
  if (!(min_eig >= kEkfMinEigen) || asym > 1e-12) failures.push_back("P not symmetric PSD");

  Verdict v;
  v.detail = fmt::format("RMSE {:.5f} m vs raw {:.5f} m, velocity error {:.2f}%, min eig {:.3g}, asymmetry {:.2g}",
                         rmse, raw, 100 * vel_err, min_eig, asym);
  for (const auto& f : failures) v.detail += "; failed: " + f;
  v.pass = within_budget(timer, kEkfBudget, v.detail) && failures.empty();
  return v;
}

// ---------------------------------------------------------------------------
// 8. baseline end-to-end

Verdict baseline_end_to_end() {
  Timer timer;
  const RunConfig cfg;
  const ControllerFactory base = make_controller_factory("ekf-baseline", cfg.baseline);
  auto rate = [&](const std::string& name) {
    ScenarioSpec sc = cfg.scenario(name);
    sc.episodes = kBaselineEpisodes;
    sc.master_seed = kBaselineSeed;
    return landing_metrics(run_scenario(cfg.env, base, sc, workers(), "ekf-baseline")).success_rate;
  };
  const double spl = rate("SPL"), lmpl = rate("LMPL");
  Verdict v;
  v.detail = fmt::format("SPL {}, LMPL {} over {} episodes", format_percent(spl), format_percent(lmpl),
                         kBaselineEpisodes);
  v.pass = within_budget(timer, kBaselineBudget, v.detail) && spl >= kBaselineSuccess && lmpl <= spl;
  return v;
}

// ---------------------------------------------------------------------------
// 9. agent versus baseline on LMPL

Verdict comparative_ordering() {
  Timer timer;
  Verdict v;
  const DeskRun& run = desk_run();
  if (!run.result) {
    v.detail = "no checkpoint from the desk run";
    return v;
  }
  const RunConfig& cfg = run.config;
  ScenarioSpec sc = cfg.scenario("LMPL");
  sc.episodes = kCompareEpisodes;
  sc.master_seed = kCompareSeed;
  const auto agent = landing_metrics(run_scenario(cfg.env, policy_factory(run.result->networks), sc, workers(), "agent"));
  const auto base =
      landing_metrics(run_scenario(cfg.env, make_controller_factory("ekf-baseline", cfg.baseline), sc, workers(),
                                   "ekf-baseline"));
  v.detail = fmt::format("LMPL success agent {} vs baseline {} over {} episodes", format_percent(agent.success_rate),
                         format_percent(base.success_rate), kCompareEpisodes);
  v.pass = within_budget(timer, kCompareBudget, v.detail) && agent.success_rate >= base.success_rate;
  return v;
}

// ---------------------------------------------------------------------------
// 10. metrics oracles

double pearson_two_pass(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

Verdict metrics_oracles() {
  Timer timer;
  std::vector<std::string> failures;
  RngStream rng(10);
  double worst = 0.0, worst_identity = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + rng.index(100);
    std::vector<double> x(n), y(n), neg(n);
    const double slope = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-10, 10);
      y[i] = slope * x[i] + rng.normal(0, 3);
      neg[i] = -x[i];
    }
    const auto r = pearson(x, y);
    if (!r) {
      failures.push_back("undefined on random pair");
      break;
    }
    worst = std::max(worst, std::abs(*r - pearson_two_pass(x, y)));
    worst_identity = std::max({worst_identity, std::abs(*pearson(x, x) - 1.0), std::abs(*pearson(x, neg) + 1.0)});
  }
  if (!(worst <= kPearsonTol)) failures.push_back("oracle mismatch");
  if (!(worst_identity <= kIdentityTol)) failures.push_back("identity");
  if (pearson({1.0, 2.0, 3.0}, {4.0, 4.0, 4.0}).has_value()) failures.push_back("constant series");
  const SummaryStats s = precision_stats_cm({2.0, 4.0, 6.0});
  if (s.mean != 4.0 || std::abs(s.std - std::sqrt(8.0 / 3.0)) > 1e-12) failures.push_back("precision {2,4,6}");

  Verdict v;
  v.detail = fmt::format("oracle max diff {:.2g}, identity max diff {:.2g}, precision mean {}", worst,
                         worst_identity, s.mean);
  for (const auto& f : failures) v.detail += "; failed: " + f;
  v.pass = within_budget(timer, kMetricsBudget, v.detail) && failures.empty();
  return v;
}

// ---------------------------------------------------------------------------
// 11. determinism

std::string slurp_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    all += fs::relative(f, dir).string() + "\n" + ss.str();
  }
  return all;
}

Verdict determinism() {
  Timer timer;
  std::vector<std::string> failures;
  const RunConfig cfg;

  for (const std::string& name : scenario_names()) {
    const ScenarioSpec sc = cfg.scenario(name);
    for (std::uint64_t ep = 0; ep < 5; ++ep) {
      auto [s1, o1] = reset_env(cfg.env, sc, 99, ep);
      auto [s2, o2] = reset_env(cfg.env, sc, 99, ep);
      if (!(o1 == o2) || s1.vehicle.drone.position != s2.vehicle.drone.position || !(s1.wind_rng == s2.wind_rng) ||
          s1.wind.episode_is_windy != s2.wind.episode_is_windy)
        failures.push_back("reset " + name);
    }
  }

  std::vector<ScenarioResult> ra, rb;
  for (const std::string& name : {"SPL", "LMPL-WD-8500", "CTL"}) {
    ScenarioSpec sc = cfg.scenario(name);
    sc.episodes = 4;
    sc.master_seed = 17;
    const ControllerFactory f = make_controller_factory("ekf-baseline", cfg.baseline);
    auto a = run_scenario(cfg.env, f, sc, 1, "ekf-baseline");
    auto a2 = run_scenario(cfg.env, f, sc, 1, "ekf-baseline");
    auto b = run_scenario(cfg.env, f, sc, 3, "ekf-baseline");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!same_record(a[i], a2[i]) || !same_record(a[i], b[i]) || record_to_csv(a[i]) != record_to_csv(b[i]))
        failures.push_back("rollout " + std::string(name));
    }
    ra.push_back({name, "ekf-baseline", std::move(a)});
    rb.push_back({name, "ekf-baseline", std::move(b)});
  }

  const fs::path root = fs::current_path() / "acceptance_out" / "determinism";
  fs::remove_all(root);
  aggregate_report(ra, (root / "a").string());
  aggregate_report(rb, (root / "b").string());
  aggregate_report(ra, (root / "c").string());
  const std::string ta = slurp_tree(root / "a");
  if (ta != slurp_tree(root / "b") || ta != slurp_tree(root / "c")) failures.push_back("report");

  TD3Config td3 = small_td3();
  TrainOptions opt;
  opt.total_steps = 1000;
  opt.master_seed = 33;
  const ScheduleEntry block{cfg.scenario("SPL"), 1000};
  const TrainingResult t1 = train(cfg.env, {block}, td3, opt);
  const TrainingResult t2 = train(cfg.env, {block}, td3, opt);
  opt.workers = 4;
  const TrainingResult t3 = train(cfg.env, {block}, td3, opt);
  const std::string log1 = training_log_csv(t1.log);
  if (log1 != training_log_csv(t2.log) || log1 != training_log_csv(t3.log) ||
      !t1.networks.actor.same_values(t3.networks.actor))
    failures.push_back("training log");

  Verdict v;
  v.detail = fmt::format("reset, rollout (1 vs 3 workers), report files, training log (1 vs 4 workers)");
  for (const auto& f : failures) v.detail += "; failed: " + f;
  v.pass = within_budget(timer, kDeterminismBudget, v.detail) && failures.empty();
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {2, "wind gating statistics", wind_gating},
      {3, "reward branch suite", reward_branches},
      {4, "gradient correctness", gradients},
      {5, "TD3 mechanics", td3_mechanics},
      {6, "desk-scale learning", desk_learning},
      {7, "EKF quality", ekf_quality},
      {8, "baseline end-to-end", baseline_end_to_end},
      {9, "comparative ordering on LMPL", comparative_ordering},
      {10, "metrics oracles", metrics_oracles},
      {11, "determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::cout << fmt::format("{} [{}] {}: {}\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail) << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
