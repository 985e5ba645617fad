#include "gtb/world.hpp"

#include <algorithm>
#include <numeric>

#include "gtb/hash.hpp"

namespace gtb::world {

World::World(scenario::ScenarioSpec spec, WorldConfig config, std::uint64_t seed)
    : spec_(std::move(spec)), config_(config), book_(spec_.num_agents) {
  reset(seed);
}

void World::reset(std::uint64_t seed) {
  rng_.seed(seed);
  t_ = 0;
  const std::size_t n_cells = static_cast<std::size_t>(spec_.height) * spec_.width;
  cells_.assign(n_cells, Cell{});
  source_cells_.clear();
  for (std::size_t i = 0; i < n_cells; ++i) {
    cells_[i].terrain = spec_.terrain[i];
    if (cells_[i].terrain == scenario::Terrain::kStoneSource ||
        cells_[i].terrain == scenario::Terrain::kWoodSource) {
      cells_[i].resource_units = 1;  // sources start stocked
      source_cells_.push_back(static_cast<int>(i));
    }
  }
  agents_.assign(spec_.num_agents, AgentState{});
  wallets_.assign(spec_.num_agents, Wallet{});
  for (int a = 0; a < spec_.num_agents; ++a) {
    agents_[a].id = a;
    agents_[a].row = spec_.start_row[a];
    agents_[a].col = spec_.start_col[a];
    agents_[a].build_skill = spec_.build_skills[a];
    agents_[a].gather_skill = spec_.gather_skills[a];
    cells_[static_cast<std::size_t>(agents_[a].row) * spec_.width + agents_[a].col]
        .occupant = a;
  }
  book_ = market::OrderBook(spec_.num_agents);
  perm_.resize(spec_.num_agents);
  std::iota(perm_.begin(), perm_.end(), 0);
}

bool World::move_target(int agent, int dir, int* r_out, int* c_out) const {
  static constexpr int dr[4] = {-1, 1, 0, 0};
  static constexpr int dc[4] = {0, 0, -1, 1};
  const AgentState& a = agents_[agent];
  const int r = a.row + dr[dir];
  const int c = a.col + dc[dir];
  if (r < 0 || r >= spec_.height || c < 0 || c >= spec_.width) return false;
  const Cell& cell = cells_[static_cast<std::size_t>(r) * spec_.width + c];
  if (cell.terrain == scenario::Terrain::kWater) return false;
  if (cell.house_owner >= 0 && cell.house_owner != agent) return false;
  if (cell.occupant >= 0) return false;
  *r_out = r;
  *c_out = c;
  return true;
}

bool World::action_allowed(int agent, int action) const {
  if (action == kActionNoOp) return true;
  if (action >= kActionMoveBase && action < kActionMoveBase + 4) {
    int r, c;
    return move_target(agent, action - kActionMoveBase, &r, &c);
  }
  if (action == kActionBuild) {
    const AgentState& a = agents_[agent];
    const Wallet& w = wallets_[agent];
    const Cell& cell = cells_[static_cast<std::size_t>(a.row) * spec_.width + a.col];
    // Houses may not stack and may not seal off a resource source.
    return w.stone >= 1 && w.wood >= 1 && cell.house_owner < 0 &&
           cell.terrain == scenario::Terrain::kEmpty;
  }
  if (action >= kActionTradeBase && action < kNumAgentActions) {
    const TradeActionFields f = decode_trade_action(action);
    return book_.can_submit(agent, f.side, f.resource, f.price, wallets_[agent]);
  }
  throw ContractViolation("action_allowed: action out of range");
}

void World::action_mask(int agent, std::span<float> out) const {
  if (out.size() != static_cast<std::size_t>(kNumAgentActions)) {
    throw ContractViolation("action_mask: bad output size");
  }
  for (int a = 0; a < kNumAgentActions; ++a) {
    out[static_cast<std::size_t>(a)] = action_allowed(agent, a) ? 1.0f : 0.0f;
  }
}

void World::execute_action(int agent, int action, StepResult& result) {
  AgentState& a = agents_[agent];
  Wallet& w = wallets_[agent];
  if (action == kActionNoOp) return;

  if (action >= kActionMoveBase && action < kActionMoveBase + 4) {
    a.labor_total += config_.labor.move;
    int r, c;
    if (!move_target(agent, action - kActionMoveBase, &r, &c)) {
      // Occupancy can legitimately change after masking when another agent
      // moved first this step; the move is simply blocked. Static obstacles
      // cannot appear mid-step, so a masked-legal move never hits them.
      return;
    }
    Cell& from = cells_[static_cast<std::size_t>(a.row) * spec_.width + a.col];
    Cell& to = cells_[static_cast<std::size_t>(r) * spec_.width + c];
    from.occupant = -1;
    to.occupant = agent;
    a.row = r;
    a.col = c;
    if (to.resource_units > 0) {
      const Resource res = to.terrain == scenario::Terrain::kStoneSource
                               ? Resource::kStone
                               : Resource::kWood;
      int harvested = to.resource_units;
      to.resource_units = 0;
      if (bernoulli(rng_, a.gather_skill)) harvested += 1;
      w.units(res) += harvested;
      a.labor_total += config_.labor.gather;
    }
    return;
  }

  if (action == kActionBuild) {
    if (!action_allowed(agent, kActionBuild)) {
      throw ContractViolation("step: build executed without inputs or on bad cell");
    }
    Cell& cell = cells_[static_cast<std::size_t>(a.row) * spec_.width + a.col];
    w.stone -= 1;
    w.wood -= 1;
    cell.house_owner = agent;
    w.coin += a.build_skill;  // minted by the environment
    a.income_this_year += a.build_skill;
    a.labor_total += config_.labor.build;
    return;
  }

  if (action >= kActionTradeBase && action < kNumAgentActions) {
    const TradeActionFields f = decode_trade_action(action);
    a.labor_total += config_.labor.trade;  // charged at submission, win or rest
    market::SubmitResult r = book_.submit_order(agent, f.side, f.resource, f.price,
                                                t_, std::span<Wallet>(wallets_), rng_);
    if (!r.ok()) {
      throw ContractViolation("step: trade rejected by book; mask out of sync");
    }
    if (r.trade) {
      agents_[r.trade->buyer].income_this_year -= r.trade->price;
      agents_[r.trade->seller].income_this_year += r.trade->price;
      result.trades.push_back(*r.trade);
    }
    return;
  }

  throw ContractViolation("step: action out of range");
}

World::StepResult World::step(std::span<const int> actions) {
  if (actions.size() != agents_.size()) throw ContractViolation("step: bad action count");
  StepResult result;

  result.expired_orders = book_.expire_orders(t_, std::span<Wallet>(wallets_));

  // Fresh random act order each step; collisions resolve in this order.
  std::iota(perm_.begin(), perm_.end(), 0);
  shuffle_vec(perm_, rng_);
  for (int idx : perm_) {
    execute_action(idx, actions[static_cast<std::size_t>(idx)], result);
  }

  // Regrow empty, unoccupied sources. Iteration order is fixed (row-major
  // list built at reset) so the rng draw sequence is reproducible.
  for (int ci : source_cells_) {
    Cell& cell = cells_[static_cast<std::size_t>(ci)];
    if (cell.resource_units == 0 && cell.occupant < 0 &&
        bernoulli(rng_, config_.respawn_prob)) {
      cell.resource_units = 1;
    }
  }

  ++t_;
  return result;
}

std::vector<double> World::year_incomes() const {
  std::vector<double> z(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) z[i] = agents_[i].income_this_year;
  return z;
}

void World::apply_tax_deltas(std::span<const double> deltas) {
  if (deltas.size() != agents_.size()) throw ContractViolation("apply_tax_deltas: size");
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    wallets_[i].coin += deltas[i];
  }
}

void World::begin_new_year() {
  for (AgentState& a : agents_) a.income_this_year = 0.0;
}

std::vector<double> World::coin_endowments() const {
  std::vector<double> c(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) c[i] = wallets_[i].coin;
  return c;
}

std::uint64_t World::state_hash() const {
  Fnv1a h;
  h.update(static_cast<std::int64_t>(t_));
  for (const Cell& c : cells_) {
    h.update(static_cast<std::int64_t>(c.terrain));
    h.update(c.resource_units);
    h.update(c.house_owner);
    h.update(c.occupant);
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentState& a = agents_[i];
    h.update(a.row);
    h.update(a.col);
    h.update(wallets_[i].coin);
    h.update(wallets_[i].stone);
    h.update(wallets_[i].wood);
    h.update(a.labor_total);
    h.update(a.income_this_year);
  }
  const auto& esc_hash = [&h](const market::Escrow& e) {
    h.update(e.coin);
    h.update(e.units[0]);
    h.update(e.units[1]);
  };
  for (int i = 0; i < num_agents(); ++i) esc_hash(book_.escrow(i));
  for (int side = 0; side < 2; ++side) {
    for (int r = 0; r < kNumResources; ++r) {
      for (const market::Order& o :
           book_.resting(static_cast<market::Side>(side), static_cast<Resource>(r))) {
        h.update(o.id);
        h.update(o.agent);
        h.update(o.price);
        h.update(o.placed_at);
      }
    }
  }
  return h.digest();
}

}  // namespace gtb::world
