#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gtb/market.hpp"
#include "gtb/resources.hpp"
#include "gtb/rng.hpp"
#include "gtb/scenario.hpp"

namespace gtb::world {

// Labor units accrued per executed action. Gathering is a side effect of
// movement and costs its own labor on top of the move, but only when a
// harvest actually happens.
struct LaborTable {
  double move = 0.21;
  double gather = 0.21;
  double trade = 0.05;
  double build = 2.1;
};

// Flat agent action encoding, 50 actions total:
//   0        no-op
//   1..4     move up, down, left, right
//   5        build
//   6..49    trade: 6 + side*22 + resource*11 + price
inline constexpr int kNumAgentActions = 50;
inline constexpr int kActionNoOp = 0;
inline constexpr int kActionMoveBase = 1;
inline constexpr int kActionBuild = 5;
inline constexpr int kActionTradeBase = 6;

inline int trade_action(market::Side side, Resource resource, int price) {
  return kActionTradeBase + static_cast<int>(side) * 22 +
         static_cast<int>(resource) * market::kNumPriceLevels + price;
}

struct TradeActionFields {
  market::Side side;
  Resource resource;
  int price;
};

inline TradeActionFields decode_trade_action(int action) {
  const int x = action - kActionTradeBase;
  return TradeActionFields{static_cast<market::Side>(x / 22),
                           static_cast<Resource>((x % 22) / market::kNumPriceLevels),
                           x % market::kNumPriceLevels};
}

struct AgentState {
  int id = 0;
  int row = 0, col = 0;
  double build_skill = 0.0;   // coins minted per house
  double gather_skill = 0.0;  // bonus-unit probability on harvest
  double labor_total = 0.0;
  double utility_prev = 0.0;      // maintained by the episode driver
  double income_this_year = 0.0;  // coin earned since year start (pre-tax)
};

struct Cell {
  scenario::Terrain terrain = scenario::Terrain::kEmpty;
  int resource_units = 0;  // on source cells, capped at 1
  int house_owner = -1;
  int occupant = -1;
};

struct WorldConfig {
  LaborTable labor;
  double respawn_prob = 0.01;
  int vision_half = 5;  // spatial window half-width -> 11x11 crop
};

// The grid simulation. All randomness (act order, gather bonuses, market
// tiebreaks, respawns) flows from the single per-episode rng seeded at
// reset, so a logged action stream replays bit-exactly.
class World {
 public:
  World(scenario::ScenarioSpec spec, WorldConfig config, std::uint64_t seed);

  void reset(std::uint64_t seed);

  int num_agents() const { return static_cast<int>(agents_.size()); }
  int height() const { return spec_.height; }
  int width() const { return spec_.width; }
  int t() const { return t_; }
  const scenario::ScenarioSpec& spec() const { return spec_; }
  const WorldConfig& config() const { return config_; }

  const AgentState& agent(int i) const { return agents_[i]; }
  const Wallet& wallet(int i) const { return wallets_[i]; }
  const Cell& cell(int r, int c) const {
    return cells_[static_cast<std::size_t>(r) * spec_.width + c];
  }
  market::OrderBook& book() { return book_; }
  const market::OrderBook& book() const { return book_; }
  Rng& rng() { return rng_; }

  // True iff `action` is legal for the agent in the current state. Trades
  // check escrow affordability and open-order limits; moves check static
  // obstacles and current occupancy. Occupancy may still change before the
  // agent executes (another agent moves first); that one case is resolved
  // by blocking, every other masked-valid action stays valid.
  bool action_allowed(int agent, int action) const;
  void action_mask(int agent, std::span<float> out) const;  // 0/1 per action

  struct StepResult {
    std::vector<market::Trade> trades;
    int expired_orders = 0;
  };

  // Executes one timestep: expire stale orders, act in a fresh random
  // permutation, respawn resources. Throws ContractViolation if an action
  // violates its own mask (the caller must mask before sampling).
  StepResult step(std::span<const int> actions);

  // Tax-year support: pre-tax incomes since year start, then lump-sum
  // settlement applied directly to coin endowments.
  std::vector<double> year_incomes() const;
  void apply_tax_deltas(std::span<const double> deltas);
  void begin_new_year();

  std::vector<double> coin_endowments() const;

  // Digest over the full dynamic state (agents, wallets, cells, clock).
  std::uint64_t state_hash() const;

 private:
  bool move_target(int agent, int dir, int* r_out, int* c_out) const;
  void execute_action(int agent, int action, StepResult& result);

  scenario::ScenarioSpec spec_;
  WorldConfig config_;
  std::vector<Cell> cells_;
  std::vector<AgentState> agents_;
  std::vector<Wallet> wallets_;
  std::vector<int> source_cells_;  // row-major indices of source cells
  std::vector<int> perm_;          // scratch, reused every step
  market::OrderBook book_;
  Rng rng_;
  int t_ = 0;
};

}  // namespace gtb::world
