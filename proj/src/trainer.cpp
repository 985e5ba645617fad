#include "gtb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gtb/hash.hpp"
#include "gtb/obs.hpp"
#include "gtb/world.hpp"

namespace gtb::train {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string metrics_header() {
  return "iter,steps,mean_agent_reward,planner_reward,swf,equality,"
         "productivity,entropy_agent,entropy_planner,tax_cap";
}

std::string metrics_row(const IterationMetrics& m) {
  std::string s = std::to_string(m.iter) + "," + std::to_string(m.steps);
  for (double v : {m.mean_agent_reward, m.planner_reward, m.swf, m.equality,
                   m.productivity, m.entropy_agent, m.entropy_planner,
                   m.tax_cap})
    s += "," + fmt(v);
  return s;
}

}  // namespace

policy::PolicyConfig agent_policy_config(const env::EnvConfig& env_cfg,
                                         int num_agents,
                                         const NetworkSizes& net) {
  policy::PolicyConfig p;
  p.spatial_channels = obs::kSpatialChannels;
  p.spatial_h = obs::spatial_window(env_cfg.world);
  p.spatial_w = p.spatial_h;
  p.conv1_channels = net.conv1;
  p.conv2_channels = net.conv2;
  p.flat_dim = obs::agent_flat_size(num_agents);
  p.fc_width = net.agent_fc;
  p.lstm_width = net.agent_lstm;
  p.head_sizes = {world::kNumAgentActions};
  return p;
}

policy::PolicyConfig planner_policy_config(int num_agents,
                                           const NetworkSizes& net) {
  policy::PolicyConfig p;
  p.flat_dim = obs::planner_flat_size(num_agents);
  p.fc_width = net.planner_fc;
  p.lstm_width = net.planner_lstm;
  p.head_sizes.assign(fiscal::kNumBrackets, env::kPlannerActionsPerBracket);
  return p;
}

Trainer::Trainer(scenario::ScenarioSpec spec, const env::EnvConfig& env_cfg,
                 const TrainerConfig& cfg, std::uint64_t seed,
                 std::string out_dir, std::uint64_t config_hash)
    : cfg_(cfg),
      env_cfg_(env_cfg),
      out_dir_(std::move(out_dir)),
      config_hash_(config_hash),
      seed_(seed),
      scenario_name_(spec.name),
      agent_opt_(cfg.agent_lr),
      planner_opt_(cfg.planner_lr),
      rollout_rng_(derive_seed(seed, 13)),
      update_rng_(derive_seed(seed, 14)),
      seed_rng_(derive_seed(seed, 15)) {
  if (cfg_.replicas <= 0) throw ConfigError("need at least one replica");
  if (cfg_.horizon <= 0) throw ConfigError("horizon must be positive");
  if (cfg_.max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (env_cfg_.episode_len % cfg_.horizon != 0)
    throw ConfigError("episode length must be a whole number of horizons");
  if (cfg_.horizon % cfg_.agent_ppo.seq_len != 0 ||
      cfg_.horizon % cfg_.planner_ppo.seq_len != 0)
    throw ConfigError("horizon must be a whole number of training sequences");

  const int agent_total = cfg_.replicas * spec.num_agents * cfg_.horizon;
  const int planner_total = cfg_.replicas * cfg_.horizon;
  if (agent_total % cfg_.agent_ppo.minibatch != 0)
    throw ConfigError("agent minibatch must divide " +
                      std::to_string(agent_total));
  if (planner_total % cfg_.planner_ppo.minibatch != 0)
    throw ConfigError("planner minibatch must divide " +
                      std::to_string(planner_total));

  agent_pcfg_ = agent_policy_config(env_cfg_, spec.num_agents, cfg_.net);
  planner_pcfg_ = planner_policy_config(spec.num_agents, cfg_.net);
  Rng agent_init(derive_seed(seed, 11));
  Rng planner_init(derive_seed(seed, 12));
  agent_params_ = policy::init_params(agent_pcfg_, agent_init);
  planner_params_ = policy::init_params(planner_pcfg_, planner_init);

  envs_.reserve(static_cast<std::size_t>(cfg_.replicas));
  agent_hidden_.resize(static_cast<std::size_t>(cfg_.replicas));
  planner_hidden_.resize(static_cast<std::size_t>(cfg_.replicas));
  std::uint64_t seed0 = 0;
  for (int r = 0; r < cfg_.replicas; ++r) {
    const std::uint64_t s = seed_rng_();
    if (r == 0) seed0 = s;
    envs_.emplace_back(spec, env_cfg_, s);
    agent_hidden_[static_cast<std::size_t>(r)].assign(
        static_cast<std::size_t>(spec.num_agents),
        policy::zero_hidden(agent_pcfg_));
    planner_hidden_[static_cast<std::size_t>(r)] =
        policy::zero_hidden(planner_pcfg_);
  }

  cur_ = curriculum_at(cfg_.curriculum, 0);
  for (env::Env& e : envs_) e.set_curriculum(cur_);

  if (!out_dir_.empty()) std::filesystem::create_directories(out_dir_);
  if (cfg_.log_episode_every > 0 && !out_dir_.empty()) {
    // episodes_started_ == 0 always matches the sampling cadence
    log_ = std::make_unique<episodelog::Writer>(
        out_dir_ + "/episode_0.jsonl", cfg_.hash_every);
    log_->header(config_hash_, seed0, scenario_name_, envs_[0]);
  }
}

void Trainer::apply_curriculum() {
  const CurriculumState next = curriculum_at(cfg_.curriculum, total_steps_);
  const bool changed = !(next == cur_);
  cur_ = next;
  for (env::Env& e : envs_) e.set_curriculum(cur_);
  if (changed) {
    have_best_ = false;
    stagnant_ = 0;
    last_change_row_ = history_.size();
    if (log_) log_->curriculum(envs_[0]);
  }
}

void Trainer::begin_episode_log(int replica) {
  if (replica != 0 || cfg_.log_episode_every <= 0 || out_dir_.empty()) return;
  if (episodes_started_ % cfg_.log_episode_every != 0) return;
  log_ = std::make_unique<episodelog::Writer>(
      out_dir_ + "/episode_" + std::to_string(episodes_started_) + ".jsonl",
      cfg_.hash_every);
}

void Trainer::rollout_replica(int r, std::vector<ppo::Stream>& agent_streams,
                              std::vector<ppo::Stream>& planner_streams,
                              IterationMetrics& m) {
  env::Env& e = envs_[static_cast<std::size_t>(r)];
  const int n = e.num_agents();
  ppo::Stream& ps = planner_streams[static_cast<std::size_t>(r)];
  policy::Hidden& ph = planner_hidden_[static_cast<std::size_t>(r)];
  // Scripted planners compute rates inside the env; their policy network
  // never trains, so sampling it would only burn time and rng draws.
  const bool learned = env_cfg_.planner == env::PlannerKind::kLearned;

  Eigen::VectorXd pflat, aspat, aflat, amask;
  const Eigen::VectorXd no_spatial;
  std::vector<int> acts(static_cast<std::size_t>(n));
  policy::ActResult pres;
  bool finished = false;

  for (int t = 0; t < cfg_.horizon; ++t) {
    if (learned) {
      e.planner_observation(pflat);
      std::vector<Eigen::VectorXd> pmasks = e.planner_action_masks();
      if (t % cfg_.planner_ppo.seq_len == 0) ps.seq_hidden.push_back(ph);
      pres = policy::act(planner_params_, planner_pcfg_, no_spatial, pflat,
                         pmasks, ph, rollout_rng_);
      ps.flat.push_back(pflat);
      std::vector<nn::Mat> pmask_mats(pmasks.begin(), pmasks.end());
      ps.masks.push_back(std::move(pmask_mats));
      ps.actions.push_back(pres.actions);
      ps.logp.push_back(pres.logp);
      ps.value.push_back(pres.value);
      m.entropy_planner += pres.entropy;
    }

    for (int i = 0; i < n; ++i) {
      ppo::Stream& as = agent_streams[static_cast<std::size_t>(r * n + i)];
      e.agent_observation(i, aspat, aflat);
      e.agent_action_mask(i, amask);
      policy::Hidden& ah =
          agent_hidden_[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
      if (t % cfg_.agent_ppo.seq_len == 0) as.seq_hidden.push_back(ah);
      const policy::ActResult ares =
          policy::act(agent_params_, agent_pcfg_, aspat, aflat, {amask}, ah,
                      rollout_rng_);
      as.spatial.push_back(aspat);
      as.flat.push_back(aflat);
      as.masks.push_back({amask});
      as.actions.push_back(ares.actions);
      as.logp.push_back(ares.logp);
      as.value.push_back(ares.value);
      m.entropy_agent += ares.entropy;
      acts[static_cast<std::size_t>(i)] = ares.actions[0];
    }

    const env::StepOutputs out = e.step(acts, pres.actions);
    if (r == 0 && log_) log_->step(e, acts, pres.actions, out);

    for (int i = 0; i < n; ++i) {
      const double rew = out.agent_rewards[static_cast<std::size_t>(i)];
      agent_streams[static_cast<std::size_t>(r * n + i)].reward.push_back(rew);
      m.mean_agent_reward += rew;
    }
    ps.reward.push_back(out.planner_reward);
    m.planner_reward += out.planner_reward;

    if (out.episode_done) {
      finished = true;
      if (r == 0 && log_) {
        log_->finish(e);
        log_.reset();
      }
      if (r == 0) ++episodes_started_;
      const std::uint64_t s = seed_rng_();
      e.reset(s);
      e.set_curriculum(cur_);
      for (policy::Hidden& h : agent_hidden_[static_cast<std::size_t>(r)])
        h = policy::zero_hidden(agent_pcfg_);
      ph = policy::zero_hidden(planner_pcfg_);
      if (r == 0) {
        begin_episode_log(r);
        if (log_) log_->header(config_hash_, s, scenario_name_, e);
      }
    }
  }

  if (finished) {
    // Episode boundaries align with iteration ends, so a finished episode
    // means the last transition was terminal: no bootstrap.
    for (int i = 0; i < n; ++i)
      agent_streams[static_cast<std::size_t>(r * n + i)].bootstrap = 0.0;
    ps.bootstrap = 0.0;
  } else {
    for (int i = 0; i < n; ++i) {
      e.agent_observation(i, aspat, aflat);
      agent_streams[static_cast<std::size_t>(r * n + i)].bootstrap =
          policy::state_value(
              agent_params_, agent_pcfg_, aspat, aflat,
              agent_hidden_[static_cast<std::size_t>(r)]
                           [static_cast<std::size_t>(i)]);
    }
    if (learned) {
      e.planner_observation(pflat);
      ps.bootstrap = policy::state_value(planner_params_, planner_pcfg_,
                                         no_spatial, pflat, ph);
    }
  }
}

IterationMetrics Trainer::iterate() {
  apply_curriculum();

  const int n = envs_[0].num_agents();
  std::vector<ppo::Stream> agent_streams(
      static_cast<std::size_t>(cfg_.replicas * n));
  std::vector<ppo::Stream> planner_streams(
      static_cast<std::size_t>(cfg_.replicas));

  IterationMetrics m;
  for (int r = 0; r < cfg_.replicas; ++r)
    rollout_replica(r, agent_streams, planner_streams, m);

  const double agent_transitions =
      static_cast<double>(cfg_.replicas) * n * cfg_.horizon;
  const double planner_transitions =
      static_cast<double>(cfg_.replicas) * cfg_.horizon;
  m.mean_agent_reward /= agent_transitions;
  m.planner_reward /= planner_transitions;
  m.entropy_agent /= agent_transitions;
  m.entropy_planner /= planner_transitions;
  for (const env::Env& e : envs_) {
    m.swf += e.social_welfare_now();
    m.equality += e.equality_now();
    m.productivity += e.productivity_now();
  }
  m.swf /= cfg_.replicas;
  m.equality /= cfg_.replicas;
  m.productivity /= cfg_.replicas;
  m.tax_cap = cur_.tax_cap;

  ppo::finalize_streams(agent_streams, cfg_.agent_ppo.gamma,
                        cfg_.agent_ppo.lam);
  ppo::ppo_update(agent_params_, agent_opt_, agent_pcfg_, cfg_.agent_ppo,
                  agent_streams, update_rng_);

  if (env_cfg_.planner == env::PlannerKind::kLearned && cur_.taxes_enabled) {
    ppo::PpoConfig pcfg = cfg_.planner_ppo;
    pcfg.ent_coef = cur_.planner_entropy_coef;
    ppo::finalize_streams(planner_streams, pcfg.gamma, pcfg.lam);
    ppo::ppo_update(planner_params_, planner_opt_, planner_pcfg_, pcfg,
                    planner_streams, update_rng_);
  }

  total_steps_ += static_cast<std::int64_t>(cfg_.replicas) * cfg_.horizon;
  m.iter = iter_++;
  m.steps = total_steps_;
  history_.push_back(m);
  update_early_stop(m);
  return m;
}

void Trainer::update_early_stop(const IterationMetrics&) {
  const int w = cfg_.early_stop_window;
  if (w <= 0) return;
  // The smoothing window must refill with post-change rows before counting
  // resumes; anneal-phase iterations keep moving last_change_row_ forward,
  // so early stopping is effectively armed only on a static curriculum.
  const int have = static_cast<int>(history_.size() - last_change_row_);
  if (have < w) return;
  double agent_smooth = 0.0, planner_smooth = 0.0;
  for (std::size_t k = history_.size() - static_cast<std::size_t>(w);
       k < history_.size(); ++k) {
    agent_smooth += history_[k].mean_agent_reward;
    planner_smooth += history_[k].planner_reward;
  }
  agent_smooth /= w;
  planner_smooth /= w;
  if (!have_best_) {
    best_agent_smooth_ = agent_smooth;
    best_planner_smooth_ = planner_smooth;
    have_best_ = true;
    stagnant_ = 0;
    return;
  }
  bool improved = false;
  if (agent_smooth > best_agent_smooth_) {
    best_agent_smooth_ = agent_smooth;
    improved = true;
  }
  if (planner_smooth > best_planner_smooth_) {
    best_planner_smooth_ = planner_smooth;
    improved = true;
  }
  stagnant_ = improved ? 0 : stagnant_ + 1;
  if (stagnant_ >= w) early_stopped_ = true;
}

bool Trainer::done() const {
  return early_stopped_ || total_steps_ >= cfg_.max_steps;
}

void Trainer::save_checkpoints() const {
  if (out_dir_.empty()) return;
  nn::save_params(out_dir_ + "/agent_params.bin", agent_params_, config_hash_);
  nn::save_params(out_dir_ + "/planner_params.bin", planner_params_,
                  config_hash_);
}

void Trainer::run() {
  std::ofstream csv;
  if (!out_dir_.empty()) {
    csv.open(out_dir_ + "/metrics.csv");
    if (!csv) throw ConfigError("cannot write metrics.csv in " + out_dir_);
    csv << "# config=" << hex64(config_hash_) << " seed=" << seed_ << "\n"
        << metrics_header() << "\n";
  }
  while (!done()) {
    const IterationMetrics m = iterate();
    if (csv) {
      csv << metrics_row(m) << "\n";
      csv.flush();
    }
    if (cfg_.checkpoint_every > 0 && m.iter % cfg_.checkpoint_every == 0)
      save_checkpoints();
  }
  save_checkpoints();
}

std::vector<EvalRow> evaluate(scenario::ScenarioSpec spec,
                              const env::EnvConfig& env_cfg,
                              const NetworkSizes& net,
                              const nn::Params& agent_params,
                              const nn::Params& planner_params,
                              const EvalConfig& eval_cfg, std::uint64_t seed,
                              const std::string& out_dir,
                              std::uint64_t config_hash) {
  const int n = spec.num_agents;
  const policy::PolicyConfig apc = agent_policy_config(env_cfg, n, net);
  const policy::PolicyConfig ppc = planner_policy_config(n, net);
  const std::string scenario_name = spec.name;

  std::uint64_t ep_seed = derive_seed(seed, 100);
  env::Env e(std::move(spec), env_cfg, ep_seed);
  e.set_curriculum(curriculum_done());
  Rng act_rng(derive_seed(seed, 22));

  std::vector<EvalRow> rows;
  for (int ep = 0; ep < eval_cfg.episodes; ++ep) {
    if (ep > 0) {
      ep_seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(ep));
      e.reset(ep_seed);
      e.set_curriculum(curriculum_done());
    }
    std::unique_ptr<episodelog::Writer> log;
    if (eval_cfg.log_every > 0 && !out_dir.empty() &&
        ep % eval_cfg.log_every == 0) {
      std::filesystem::create_directories(out_dir);
      log = std::make_unique<episodelog::Writer>(
          out_dir + "/eval_episode_" + std::to_string(ep) + ".jsonl",
          eval_cfg.hash_every);
      log->header(config_hash, ep_seed, scenario_name, e);
    }

    std::vector<policy::Hidden> ah(static_cast<std::size_t>(n),
                                   policy::zero_hidden(apc));
    policy::Hidden ph = policy::zero_hidden(ppc);
    Eigen::VectorXd pflat, aspat, aflat, amask;
    const Eigen::VectorXd no_spatial;
    std::vector<int> acts(static_cast<std::size_t>(n));

    const bool learned = env_cfg.planner == env::PlannerKind::kLearned;
    bool done = false;
    while (!done) {
      policy::ActResult pres;
      if (learned) {
        e.planner_observation(pflat);
        pres = policy::act(planner_params, ppc, no_spatial, pflat,
                           e.planner_action_masks(), ph, act_rng);
      }
      for (int i = 0; i < n; ++i) {
        e.agent_observation(i, aspat, aflat);
        e.agent_action_mask(i, amask);
        const policy::ActResult ares =
            policy::act(agent_params, apc, aspat, aflat, {amask},
                        ah[static_cast<std::size_t>(i)], act_rng);
        acts[static_cast<std::size_t>(i)] = ares.actions[0];
      }
      const env::StepOutputs out = e.step(acts, pres.actions);
      if (log) log->step(e, acts, pres.actions, out);
      done = out.episode_done;
    }

    EvalRow row;
    row.episode = ep;
    row.swf = e.social_welfare_now();
    row.equality = e.equality_now();
    row.productivity = e.productivity_now();
    const std::vector<double> u = e.utilities();
    row.mean_utility =
        std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
    const std::vector<double> coins = e.world().coin_endowments();
    row.mean_coin = std::accumulate(coins.begin(), coins.end(), 0.0) /
                    static_cast<double>(n);
    rows.push_back(row);
    if (log) log->finish(e);
  }
  return rows;
}

}  // namespace gtb::train
