#pragma once

#include <span>
#include <vector>

#include "gtb/fiscal.hpp"
#include "gtb/world.hpp"

namespace gtb::obs {

// Tax-side inputs to observations. The environment driver keeps this in
// sync with the fiscal clock; year 1 sees zero "previous" incomes/rates.
struct TaxContext {
  fiscal::TaxSchedule schedule;
  int t = 0;
  int steps_per_year = 100;
  int episode_len = 1000;
  std::vector<double> prev_year_incomes;  // per agent
  std::vector<double> prev_year_rates;    // per agent
};

// Spatial crop layers, egocentric, zero-padded outside the grid. The
// agent's own cell is always the window center so no self layer is needed.
inline constexpr int kSpatialChannels = 8;  // water, stone-src, wood-src,
                                            // stone, wood, own house,
                                            // other house, other agent

int spatial_window(const world::WorldConfig& config);  // 2*half+1
int spatial_size(const world::WorldConfig& config);
int agent_flat_size(int num_agents);
int planner_flat_size(int num_agents);

// Feature scales are fixed constants; policies see values of order one.
void write_agent_spatial(const world::World& w, int agent, std::span<double> out);
void write_agent_flat(const world::World& w, int agent, const TaxContext& tax,
                      std::span<double> out);
// The planner view: per-agent wallets with identity, aggregate market
// state, tax history. Deliberately no map and no skills.
void write_planner_flat(const world::World& w, const TaxContext& tax,
                        std::span<double> out);

}  // namespace gtb::obs
