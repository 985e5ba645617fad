#include "gtb/obs.hpp"

#include <algorithm>
#include <cmath>

namespace gtb::obs {

namespace {
constexpr double kCoinScale = 0.01;
constexpr double kUnitScale = 0.1;
constexpr double kSkillScale = 1.0 / 30.0;
constexpr double kOrderCountScale = 0.2;
constexpr double kPriceScale = 0.1;
constexpr double kTradeCountScale = 0.05;
constexpr double kIncomeScale = 0.01;
}  // namespace

int spatial_window(const world::WorldConfig& config) { return 2 * config.vision_half + 1; }

int spatial_size(const world::WorldConfig& config) {
  const int win = spatial_window(config);
  return kSpatialChannels * win * win;
}

int agent_flat_size(int num_agents) {
  // endowment 3 + skills 2 + market 2*56 + rates 7 + progress 2 +
  // sorted prev incomes N + own marginal rate 1
  return 3 + 2 + 2 * 56 + 7 + 2 + num_agents + 1;
}

int planner_flat_size(int num_agents) {
  // wallets 3N + market 2*34 + rates 7 + progress 2 + prev incomes N +
  // prev rates N
  return 3 * num_agents + 2 * 34 + 7 + 2 + 2 * num_agents;
}

void write_agent_spatial(const world::World& w, int agent, std::span<double> out) {
  const int half = w.config().vision_half;
  const int win = 2 * half + 1;
  if (out.size() != static_cast<std::size_t>(kSpatialChannels * win * win)) {
    throw ContractViolation("write_agent_spatial: bad output size");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const world::AgentState& a = w.agent(agent);
  for (int wr = 0; wr < win; ++wr) {
    const int r = a.row - half + wr;
    if (r < 0 || r >= w.height()) continue;
    for (int wc = 0; wc < win; ++wc) {
      const int c = a.col - half + wc;
      if (c < 0 || c >= w.width()) continue;
      const world::Cell& cell = w.cell(r, c);
      const int base = wr * win + wc;
      auto set = [&](int ch, double v) { out[static_cast<std::size_t>(ch * win * win + base)] = v; };
      switch (cell.terrain) {
        case scenario::Terrain::kWater: set(0, 1.0); break;
        case scenario::Terrain::kStoneSource:
          set(1, 1.0);
          if (cell.resource_units > 0) set(3, cell.resource_units);
          break;
        case scenario::Terrain::kWoodSource:
          set(2, 1.0);
          if (cell.resource_units > 0) set(4, cell.resource_units);
          break;
        case scenario::Terrain::kEmpty: break;
      }
      if (cell.house_owner >= 0) set(cell.house_owner == agent ? 5 : 6, 1.0);
      if (cell.occupant >= 0 && cell.occupant != agent) set(7, 1.0);
    }
  }
}

namespace {

std::size_t write_market_block(const market::MarketSummary& ms, bool split_own,
                               std::span<double> out, std::size_t at) {
  for (int r = 0; r < kNumResources; ++r) {
    const auto& res = ms.res[r];
    if (split_own) {
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = res.levels.own_bids[p] * kOrderCountScale;
      }
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = res.levels.own_asks[p] * kOrderCountScale;
      }
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = res.levels.other_bids[p] * kOrderCountScale;
      }
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = res.levels.other_asks[p] * kOrderCountScale;
      }
    } else {
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = (res.levels.own_bids[p] + res.levels.other_bids[p]) * kOrderCountScale;
      }
      for (int p = 0; p < market::kNumPriceLevels; ++p) {
        out[at++] = (res.levels.own_asks[p] + res.levels.other_asks[p]) * kOrderCountScale;
      }
    }
    out[at++] = res.avg_trade_price * kPriceScale;
    for (int p = 0; p < market::kNumPriceLevels; ++p) {
      out[at++] = res.trade_counts[p] * kTradeCountScale;
    }
  }
  return at;
}

std::size_t write_tax_core(const TaxContext& tax, std::span<double> out, std::size_t at) {
  for (int j = 0; j < fiscal::kNumBrackets; ++j) out[at++] = tax.schedule.rates[j];
  out[at++] = static_cast<double>(tax.t % tax.steps_per_year) / tax.steps_per_year;
  out[at++] = static_cast<double>(tax.t) / tax.episode_len;
  return at;
}

}  // namespace

void write_agent_flat(const world::World& w, int agent, const TaxContext& tax,
                      std::span<double> out) {
  const int n = w.num_agents();
  if (out.size() != static_cast<std::size_t>(agent_flat_size(n))) {
    throw ContractViolation("write_agent_flat: bad output size");
  }
  if (static_cast<int>(tax.prev_year_incomes.size()) != n) {
    throw ContractViolation("write_agent_flat: prev incomes size");
  }
  std::size_t at = 0;
  const Wallet& wal = w.wallet(agent);
  const world::AgentState& a = w.agent(agent);
  out[at++] = wal.stone * kUnitScale;
  out[at++] = wal.wood * kUnitScale;
  out[at++] = wal.coin * kCoinScale;
  out[at++] = a.build_skill * kSkillScale;
  out[at++] = a.gather_skill;

  const market::MarketSummary ms = market::market_observation(w.book(), agent);
  at = write_market_block(ms, /*split_own=*/true, out, at);
  at = write_tax_core(tax, out, at);

  // Previous-year incomes, anonymized by sorting.
  std::vector<double> sorted(tax.prev_year_incomes);
  std::sort(sorted.begin(), sorted.end());
  for (double z : sorted) out[at++] = z * kIncomeScale;
  out[at++] = tax.schedule.marginal_rate(a.income_this_year);
  if (at != out.size()) throw ContractViolation("write_agent_flat: layout drift");
}

void write_planner_flat(const world::World& w, const TaxContext& tax,
                        std::span<double> out) {
  const int n = w.num_agents();
  if (out.size() != static_cast<std::size_t>(planner_flat_size(n))) {
    throw ContractViolation("write_planner_flat: bad output size");
  }
  if (static_cast<int>(tax.prev_year_incomes.size()) != n ||
      static_cast<int>(tax.prev_year_rates.size()) != n) {
    throw ContractViolation("write_planner_flat: prev year sizes");
  }
  std::size_t at = 0;
  for (int i = 0; i < n; ++i) {
    const Wallet& wal = w.wallet(i);
    out[at++] = wal.stone * kUnitScale;
    out[at++] = wal.wood * kUnitScale;
    out[at++] = wal.coin * kCoinScale;
  }
  const market::MarketSummary ms = market::market_observation(w.book(), std::nullopt);
  at = write_market_block(ms, /*split_own=*/false, out, at);
  at = write_tax_core(tax, out, at);
  for (int i = 0; i < n; ++i) out[at++] = tax.prev_year_incomes[i] * kIncomeScale;
  for (int i = 0; i < n; ++i) out[at++] = tax.prev_year_rates[i];
  if (at != out.size()) throw ContractViolation("write_planner_flat: layout drift");
}

}  // namespace gtb::obs
