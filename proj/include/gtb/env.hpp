#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gtb/curriculum.hpp"
#include "gtb/fiscal.hpp"
#include "gtb/obs.hpp"
#include "gtb/scenario.hpp"
#include "gtb/welfare.hpp"
#include "gtb/world.hpp"

namespace gtb::env {

// Planner action encoding, per bracket: 0..20 pick the marginal rate
// i * 0.05, 21 keeps the bracket's current rate. Off-cycle steps are masked
// down to keep-only so the planner's recurrent state still advances.
inline constexpr int kPlannerActionsPerBracket = fiscal::kRateGridSize + 1;
inline constexpr int kPlannerKeep = fiscal::kRateGridSize;

// kFlat is internal plumbing for elasticity sweeps (a fixed uniform
// marginal rate); the CLI exposes only the first four.
enum class PlannerKind { kFreeMarket, kUsFederal, kSaez, kLearned, kFlat };

PlannerKind parse_planner_kind(const std::string& name);
std::string planner_kind_name(PlannerKind kind);

struct EnvConfig {
  world::WorldConfig world;
  int steps_per_year = 100;
  int episode_len = 1000;  // must be a multiple of steps_per_year
  welfare::SwfObjective objective =
      welfare::SwfObjective::kEqualityTimesProductivity;
  double eta = welfare::kDefaultEta;
  PlannerKind planner = PlannerKind::kFreeMarket;
  fiscal::SaezParams saez{};  // elasticity used by the Saez baseline
  int saez_lookback = 10;     // episodes of income history retained
  double flat_rate = 0.0;     // uniform marginal rate for PlannerKind::kFlat
};

struct StepOutputs {
  std::vector<double> agent_rewards;  // marginal utility per agent
  double planner_reward = 0.0;        // marginal social welfare
  bool tax_settled = false;
  bool episode_done = false;
  // Filled only when tax_settled: the year index just closed and the
  // pre-tax incomes it was settled on (the schedule is still current).
  int settled_year = -1;
  std::vector<double> settled_incomes;
  std::vector<market::Trade> trades;
};

// One replica of the full economy: grid world, trading, the fiscal year
// clock, and reward bookkeeping. Agents and planner act simultaneously:
// observations reflect the state both sides saw, then step() applies the
// planner's schedule choice (first step of each year), runs the world step,
// and settles taxes on the year's last step before rewards are computed.
class Env {
 public:
  Env(scenario::ScenarioSpec spec, EnvConfig config, std::uint64_t seed);

  // Starts a new episode. Saez income history survives across episodes; the
  // tax schedule does not (every episode opens untaxed until the planner
  // moves, so logged episodes replay without cross-episode state).
  void reset(std::uint64_t seed);

  int num_agents() const { return world_.num_agents(); }
  int t() const { return world_.t(); }
  const world::World& world() const { return world_; }
  const EnvConfig& config() const { return config_; }
  const fiscal::TaxSchedule& schedule() const { return schedule_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  void set_curriculum(const CurriculumState& c) { curriculum_ = c; }
  std::int64_t episode_index() const { return episode_; }
  fiscal::IncomeBuffer& income_buffer() { return income_buffer_; }

  bool planner_on_cycle() const {
    return world_.t() % config_.steps_per_year == 0;
  }

  void agent_observation(int agent, Eigen::VectorXd& spatial,
                         Eigen::VectorXd& flat) const;
  void planner_observation(Eigen::VectorXd& flat) const;
  void agent_action_mask(int agent, Eigen::VectorXd& out) const;
  std::vector<Eigen::VectorXd> planner_action_masks() const;

  // planner_actions must hold 7 entries when a learned planner acts
  // on-cycle with taxes enabled; it is ignored otherwise.
  StepOutputs step(std::span<const int> agent_actions,
                   std::span<const int> planner_actions);

  // Replay support: the next year boundary applies this schedule verbatim
  // (cap clamp still runs) instead of consulting the planner kind. Logged
  // episodes carry the applied rates, so a replayed Saez or learned run
  // does not depend on cross-episode history.
  void override_next_schedule(const fiscal::TaxSchedule& s) {
    schedule_override_ = s;
  }

  std::vector<double> utilities() const;
  double social_welfare_now() const;
  double equality_now() const;
  double productivity_now() const;

  // Digest of world state plus fiscal state; logged per step for replay
  // verification.
  std::uint64_t state_hash() const;

 private:
  void set_year_schedule(std::span<const int> planner_actions);
  double utility_of(int agent) const;

  EnvConfig config_;
  world::World world_;
  CurriculumState curriculum_;
  fiscal::TaxSchedule schedule_;
  obs::TaxContext taxctx_;
  fiscal::IncomeBuffer income_buffer_;
  std::optional<fiscal::TaxSchedule> schedule_override_;
  std::vector<double> utility_prev_;
  double swf_prev_ = 0.0;
  std::int64_t episode_ = -1;  // first reset() brings it to 0
};

}  // namespace gtb::env
