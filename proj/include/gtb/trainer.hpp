#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gtb/curriculum.hpp"
#include "gtb/env.hpp"
#include "gtb/episode_log.hpp"
#include "gtb/policy.hpp"
#include "gtb/ppo.hpp"

namespace gtb::train {

struct NetworkSizes {
  int conv1 = 16;
  int conv2 = 32;
  int agent_fc = 128;
  int agent_lstm = 128;
  int planner_fc = 256;
  int planner_lstm = 256;
};

struct TrainerConfig {
  int replicas = 30;
  int horizon = 200;
  double agent_lr = 3e-4;
  double planner_lr = 1e-4;
  ppo::PpoConfig agent_ppo;
  ppo::PpoConfig planner_ppo = [] {
    ppo::PpoConfig c;
    c.minibatch = 1500;
    return c;
  }();
  CurriculumConfig curriculum;
  NetworkSizes net;
  std::int64_t max_steps = 1'000'000;
  // Iterations of stagnant smoothed reward (agent and planner both) before
  // training stops early. Counted only while the curriculum is static, so
  // anneal-driven reward drops never trip it. 0 disables.
  int early_stop_window = 50;
  int checkpoint_every = 0;    // iterations between checkpoint saves; 0 = final only
  int log_episode_every = 0;   // replica 0: log every k-th episode; 0 = off
  int hash_every = 100;        // state-hash cadence inside episode logs
};

// The per-iteration CSV row. Rewards are per-transition means; welfare
// numbers are end-of-rollout snapshots averaged over replicas; entropies
// are means of the sampled-action entropies.
struct IterationMetrics {
  int iter = 0;
  std::int64_t steps = 0;
  double mean_agent_reward = 0.0;
  double planner_reward = 0.0;
  double swf = 0.0;
  double equality = 0.0;
  double productivity = 0.0;
  double entropy_agent = 0.0;
  double entropy_planner = 0.0;
  double tax_cap = 0.0;
};

policy::PolicyConfig agent_policy_config(const env::EnvConfig& env_cfg,
                                         int num_agents,
                                         const NetworkSizes& net);
policy::PolicyConfig planner_policy_config(int num_agents,
                                           const NetworkSizes& net);

// Bulk-synchronous two-policy trainer: every iteration rolls `horizon`
// steps in each replica (replicas share the newest parameters and never
// mutate shared state mid-rollout), then runs one PPO pass per policy.
// Agents share one parameter set; the planner policy trains only for the
// learned planner kind and only once taxes are on.
class Trainer {
 public:
  // out_dir empty: keep artifacts (metrics, checkpoints, logs) off disk.
  Trainer(scenario::ScenarioSpec spec, const env::EnvConfig& env_cfg,
          const TrainerConfig& cfg, std::uint64_t seed,
          std::string out_dir = "", std::uint64_t config_hash = 0);

  IterationMetrics iterate();
  bool done() const;
  void run();  // iterate() until done(), writing artifacts as configured

  const nn::Params& agent_params() const { return agent_params_; }
  const nn::Params& planner_params() const { return planner_params_; }
  const std::vector<IterationMetrics>& history() const { return history_; }
  std::int64_t total_steps() const { return total_steps_; }
  bool early_stopped() const { return early_stopped_; }
  const policy::PolicyConfig& agent_policy() const { return agent_pcfg_; }
  const policy::PolicyConfig& planner_policy() const { return planner_pcfg_; }

  void save_checkpoints() const;

 private:
  void apply_curriculum();
  void rollout_replica(int r, std::vector<ppo::Stream>& agent_streams,
                       std::vector<ppo::Stream>& planner_streams,
                       IterationMetrics& m);
  void begin_episode_log(int replica);
  void update_early_stop(const IterationMetrics& m);

  TrainerConfig cfg_;
  env::EnvConfig env_cfg_;
  std::string out_dir_;
  std::uint64_t config_hash_ = 0;
  std::uint64_t seed_ = 0;
  std::string scenario_name_;

  std::vector<env::Env> envs_;
  policy::PolicyConfig agent_pcfg_, planner_pcfg_;
  nn::Params agent_params_, planner_params_;
  nn::Adam agent_opt_, planner_opt_;
  std::vector<std::vector<policy::Hidden>> agent_hidden_;  // [replica][agent]
  std::vector<policy::Hidden> planner_hidden_;             // [replica]

  Rng rollout_rng_, update_rng_, seed_rng_;
  CurriculumState cur_;
  std::int64_t total_steps_ = 0;
  int iter_ = 0;
  std::vector<IterationMetrics> history_;

  // early stopping state (reset on curriculum change)
  double best_agent_smooth_ = 0.0, best_planner_smooth_ = 0.0;
  int stagnant_ = 0;
  bool have_best_ = false;
  bool early_stopped_ = false;
  std::size_t last_change_row_ = 0;

  std::int64_t episodes_started_ = 0;  // replica 0, drives log sampling
  std::unique_ptr<episodelog::Writer> log_;
};

// Post-training rollouts under the fully annealed curriculum. The planner
// params are consulted only for the learned planner kind.
struct EvalRow {
  int episode = 0;
  double swf = 0.0;
  double equality = 0.0;
  double productivity = 0.0;
  double mean_utility = 0.0;
  double mean_coin = 0.0;
};

struct EvalConfig {
  int episodes = 10;
  int log_every = 0;  // write an episode log for every k-th episode; 0 = off
  int hash_every = 100;
};

std::vector<EvalRow> evaluate(scenario::ScenarioSpec spec,
                              const env::EnvConfig& env_cfg,
                              const NetworkSizes& net,
                              const nn::Params& agent_params,
                              const nn::Params& planner_params,
                              const EvalConfig& eval_cfg, std::uint64_t seed,
                              const std::string& out_dir = "",
                              std::uint64_t config_hash = 0);

}  // namespace gtb::train
