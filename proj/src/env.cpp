#include "gtb/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gtb/common.hpp"
#include "gtb/hash.hpp"

namespace gtb::env {

PlannerKind parse_planner_kind(const std::string& name) {
  if (name == "free-market") return PlannerKind::kFreeMarket;
  if (name == "us-federal") return PlannerKind::kUsFederal;
  if (name == "saez") return PlannerKind::kSaez;
  if (name == "learned") return PlannerKind::kLearned;
  if (name == "flat") return PlannerKind::kFlat;
  throw ConfigError("unknown planner kind: " + name +
                    " (expected free-market, us-federal, saez, learned)");
}

std::string planner_kind_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kFreeMarket: return "free-market";
    case PlannerKind::kUsFederal: return "us-federal";
    case PlannerKind::kSaez: return "saez";
    case PlannerKind::kLearned: return "learned";
    case PlannerKind::kFlat: return "flat";
  }
  throw ContractViolation("bad planner kind");
}

Env::Env(scenario::ScenarioSpec spec, EnvConfig config, std::uint64_t seed)
    : config_(config),
      world_(std::move(spec), config.world, seed),
      curriculum_(curriculum_done()),
      income_buffer_(config.saez_lookback) {
  if (config_.steps_per_year <= 0 ||
      config_.episode_len % config_.steps_per_year != 0) {
    throw ConfigError("episode length must be a whole number of tax years");
  }
  reset(seed);
}

void Env::reset(std::uint64_t seed) {
  world_.reset(seed);
  schedule_ = fiscal::TaxSchedule::free_market();
  schedule_override_.reset();
  taxctx_.schedule = schedule_;
  taxctx_.t = 0;
  taxctx_.steps_per_year = config_.steps_per_year;
  taxctx_.episode_len = config_.episode_len;
  taxctx_.prev_year_incomes.assign(static_cast<std::size_t>(num_agents()), 0.0);
  taxctx_.prev_year_rates.assign(static_cast<std::size_t>(num_agents()), 0.0);
  utility_prev_.resize(static_cast<std::size_t>(num_agents()));
  for (int i = 0; i < num_agents(); ++i)
    utility_prev_[static_cast<std::size_t>(i)] = utility_of(i);
  swf_prev_ = social_welfare_now();
  ++episode_;
}

double Env::utility_of(int agent) const {
  const world::AgentState& a = world_.agent(agent);
  return welfare::isoelastic_utility(world_.wallet(agent).coin, a.labor_total,
                                     config_.eta,
                                     curriculum_.labor_multiplier);
}

std::vector<double> Env::utilities() const {
  std::vector<double> u(static_cast<std::size_t>(num_agents()));
  for (int i = 0; i < num_agents(); ++i)
    u[static_cast<std::size_t>(i)] = utility_of(i);
  return u;
}

double Env::social_welfare_now() const {
  const std::vector<double> coins = world_.coin_endowments();
  return welfare::social_welfare(config_.objective, utilities(), coins, coins);
}

double Env::equality_now() const {
  const std::vector<double> coins = world_.coin_endowments();
  return welfare::equality(coins);
}

double Env::productivity_now() const {
  const std::vector<double> coins = world_.coin_endowments();
  return welfare::productivity(coins);
}

void Env::agent_observation(int agent, Eigen::VectorXd& spatial,
                            Eigen::VectorXd& flat) const {
  spatial.resize(obs::spatial_size(config_.world));
  flat.resize(obs::agent_flat_size(num_agents()));
  obs::write_agent_spatial(world_, agent,
                           {spatial.data(), static_cast<std::size_t>(spatial.size())});
  obs::write_agent_flat(world_, agent, taxctx_,
                        {flat.data(), static_cast<std::size_t>(flat.size())});
}

void Env::planner_observation(Eigen::VectorXd& flat) const {
  flat.resize(obs::planner_flat_size(num_agents()));
  obs::write_planner_flat(world_, taxctx_,
                          {flat.data(), static_cast<std::size_t>(flat.size())});
}

void Env::agent_action_mask(int agent, Eigen::VectorXd& out) const {
  std::array<float, world::kNumAgentActions> buf{};
  world_.action_mask(agent, buf);
  out.resize(world::kNumAgentActions);
  for (int a = 0; a < world::kNumAgentActions; ++a)
    out(a) = buf[static_cast<std::size_t>(a)];
}

std::vector<Eigen::VectorXd> Env::planner_action_masks() const {
  const bool can_set = planner_on_cycle() && curriculum_.taxes_enabled;
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(kPlannerActionsPerBracket);
  mask(kPlannerKeep) = 1.0;
  if (can_set) {
    for (int i = 0; i < fiscal::kRateGridSize; ++i) {
      const double rate = i * fiscal::kRateGridStep;
      if (rate <= curriculum_.tax_cap + 1e-12) mask(i) = 1.0;
    }
  }
  return std::vector<Eigen::VectorXd>(fiscal::kNumBrackets, mask);
}

void Env::set_year_schedule(std::span<const int> planner_actions) {
  if (schedule_override_) {
    schedule_ = *schedule_override_;
    schedule_override_.reset();
    for (double& r : schedule_.rates) r = std::min(r, curriculum_.tax_cap);
    return;
  }
  if (!curriculum_.taxes_enabled) {
    schedule_ = fiscal::TaxSchedule::free_market();
    return;
  }
  switch (config_.planner) {
    case PlannerKind::kFreeMarket:
      schedule_ = fiscal::TaxSchedule::free_market();
      break;
    case PlannerKind::kUsFederal:
      schedule_ = fiscal::TaxSchedule::us_federal_2018();
      break;
    case PlannerKind::kFlat:
      schedule_.rates.fill(config_.flat_rate);
      break;
    case PlannerKind::kSaez:
      try {
        schedule_ = fiscal::saez_rates(income_buffer_, config_.saez);
      } catch (const EmptyBufferError&) {
        // No income history yet (first year of the first episode): tax
        // nothing rather than guess.
        schedule_ = fiscal::TaxSchedule::free_market();
      }
      break;
    case PlannerKind::kLearned: {
      if (planner_actions.size() != fiscal::kNumBrackets)
        throw ContractViolation("learned planner needs 7 bracket actions");
      for (int j = 0; j < fiscal::kNumBrackets; ++j) {
        const int a = planner_actions[static_cast<std::size_t>(j)];
        if (a < 0 || a >= kPlannerActionsPerBracket)
          throw ContractViolation("planner action out of range");
        if (a != kPlannerKeep)
          schedule_.rates[static_cast<std::size_t>(j)] = a * fiscal::kRateGridStep;
      }
      break;
    }
  }
  // The anneal ceiling binds every planner, learned or scripted, so agents
  // never face rates the curriculum has not yet admitted.
  for (double& r : schedule_.rates) r = std::min(r, curriculum_.tax_cap);
}

StepOutputs Env::step(std::span<const int> agent_actions,
                      std::span<const int> planner_actions) {
  if (world_.t() >= config_.episode_len)
    throw ContractViolation("step() called on a finished episode");
  if (static_cast<int>(agent_actions.size()) != num_agents())
    throw ContractViolation("need one action per agent");

  if (planner_on_cycle()) {
    set_year_schedule(planner_actions);
    taxctx_.schedule = schedule_;
  }

  world::World::StepResult world_out = world_.step(agent_actions);

  StepOutputs out;
  out.trades = std::move(world_out.trades);
  if (world_.t() % config_.steps_per_year == 0) {
    const std::vector<double> incomes = world_.year_incomes();
    const std::vector<double> deltas =
        fiscal::settle_tax_year(incomes, schedule_);
    world_.apply_tax_deltas(deltas);
    const int year = world_.t() / config_.steps_per_year;
    income_buffer_.push_year(episode_, year, incomes, schedule_);
    out.settled_year = year - 1;  // years are zero-based
    out.settled_incomes = incomes;
    for (int i = 0; i < num_agents(); ++i) {
      taxctx_.prev_year_incomes[static_cast<std::size_t>(i)] =
          incomes[static_cast<std::size_t>(i)];
      taxctx_.prev_year_rates[static_cast<std::size_t>(i)] =
          schedule_.marginal_rate(incomes[static_cast<std::size_t>(i)]);
    }
    world_.begin_new_year();
    out.tax_settled = true;
  }
  taxctx_.t = world_.t();

  out.agent_rewards.resize(static_cast<std::size_t>(num_agents()));
  for (int i = 0; i < num_agents(); ++i) {
    const double u = utility_of(i);
    out.agent_rewards[static_cast<std::size_t>(i)] =
        u - utility_prev_[static_cast<std::size_t>(i)];
    utility_prev_[static_cast<std::size_t>(i)] = u;
  }
  const double swf = social_welfare_now();
  out.planner_reward = swf - swf_prev_;
  swf_prev_ = swf;
  out.episode_done = world_.t() == config_.episode_len;
  return out;
}

std::uint64_t Env::state_hash() const {
  Fnv1a h;
  // Episode-local state only: replay rebuilds an episode from its own log,
  // so cross-episode bookkeeping (episode counter, income history) must not
  // contaminate the digest.
  h.update(world_.state_hash());
  for (double r : schedule_.rates) h.update(r);
  for (double z : taxctx_.prev_year_incomes) h.update(z);
  return h.digest();
}

}  // namespace gtb::env
