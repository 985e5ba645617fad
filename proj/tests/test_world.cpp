#include <string>
#include <vector>

#include "doctest.h"
#include "gtb/obs.hpp"
#include "gtb/scenario.hpp"
#include "gtb/world.hpp"

using namespace gtb;
using namespace gtb::world;

namespace {

const char* kMiniMap =
    "name=test-mini\n"
    "height=6\n"
    "width=6\n"
    "agents=2\n"
    "build_skills=15,25\n"
    "gather_skills=0,1\n"
    "map=\n"
    "W.....\n"
    ".0S...\n"
    "..TS..\n"
    "....1.\n"
    "......\n"
    "....W.\n";

scenario::ScenarioSpec mini() { return scenario::parse_scenario(kMiniMap); }

World make_world(std::uint64_t seed = 1) { return World(mini(), WorldConfig{}, seed); }

int kUp = kActionMoveBase + 0;
int kDown = kActionMoveBase + 1;
int kLeft = kActionMoveBase + 2;
int kRight = kActionMoveBase + 3;

}  // namespace

TEST_CASE("scenario parsing is exact") {
  const auto spec = mini();
  CHECK(spec.name == "test-mini");
  CHECK(spec.height == 6);
  CHECK(spec.width == 6);
  CHECK(spec.num_agents == 2);
  CHECK(spec.at(0, 0) == scenario::Terrain::kWater);
  CHECK(spec.at(1, 2) == scenario::Terrain::kStoneSource);
  CHECK(spec.at(2, 2) == scenario::Terrain::kWoodSource);
  CHECK(spec.at(2, 3) == scenario::Terrain::kStoneSource);
  CHECK(spec.at(5, 4) == scenario::Terrain::kWater);
  CHECK(spec.start_row[0] == 1);
  CHECK(spec.start_col[0] == 1);
  CHECK(spec.start_row[1] == 3);
  CHECK(spec.start_col[1] == 4);
  CHECK(spec.build_skills[1] == 25.0);

  // Serialize -> parse roundtrip is lossless.
  const auto back = scenario::parse_scenario(scenario::serialize_scenario(spec));
  CHECK(back.terrain == spec.terrain);
  CHECK(back.start_row == spec.start_row);
  CHECK(back.build_skills == spec.build_skills);
}

TEST_CASE("scenario parsing rejects malformed input") {
  auto swap = [&](const std::string& from, const std::string& to) {
    std::string s = kMiniMap;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  // Row too short.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("W.....\n", "W....\n")), ConfigError);
  // Unknown character.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("..T", "..X")), ConfigError);
  // Missing agent 1.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("....1.", "......")), ConfigError);
  // Duplicate agent 0.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("....1.", "....0.")), ConfigError);
  // Skill count mismatch.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("build_skills=15,25", "build_skills=15")),
                  ConfigError);
  // Skill out of range.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("build_skills=15,25", "build_skills=15,99")),
                  ConfigError);
  // Map ends early.
  CHECK_THROWS_AS(scenario::parse_scenario(swap("....W.\n", "")), ConfigError);
  // Trailing junk.
  CHECK_THROWS_AS(scenario::parse_scenario(std::string(kMiniMap) + "extra\n"), ConfigError);
}

TEST_CASE("reset stocks sources and places agents") {
  World w = make_world();
  CHECK(w.cell(1, 2).resource_units == 1);
  CHECK(w.cell(2, 2).resource_units == 1);
  CHECK(w.cell(1, 1).occupant == 0);
  CHECK(w.cell(3, 4).occupant == 1);
  CHECK(w.wallet(0).coin == 0.0);
  CHECK(w.agent(0).build_skill == 15.0);
}

TEST_CASE("movement gathers on entry and charges labor") {
  World w = make_world();
  // Agent 0 moves right onto the stone source; gather_skill 0, no bonus.
  w.step(std::vector<int>{kRight, kActionNoOp});
  CHECK(w.agent(0).row == 1);
  CHECK(w.agent(0).col == 2);
  CHECK(w.wallet(0).stone == 1);
  CHECK(w.cell(1, 2).resource_units == 0);
  CHECK(w.agent(0).labor_total == doctest::Approx(0.21 + 0.21));
  CHECK(w.agent(1).labor_total == doctest::Approx(0.0));

  // Agent 1 (gather_skill 1) always harvests the bonus unit.
  w.step(std::vector<int>{kActionNoOp, kUp});    // (3,4) -> (2,4)
  w.step(std::vector<int>{kActionNoOp, kLeft});  // (2,4) -> (2,3) stone source
  CHECK(w.wallet(1).stone == 2);
  CHECK(w.agent(1).labor_total == doctest::Approx(2 * 0.21 + 0.21));
}

TEST_CASE("action mask blocks static obstacles") {
  World w = make_world();
  // Agent 0 at (1,1): up-left is water at (0,0) but up is (0,1) = open.
  CHECK(w.action_allowed(0, kUp));
  CHECK(w.action_allowed(0, kLeft));  // (1,0) open
  w.step(std::vector<int>{kLeft, kActionNoOp});
  CHECK(!w.action_allowed(0, kUp));  // (0,0) is water
  // Off-grid.
  w.step(std::vector<int>{kDown, kActionNoOp});  // (2,0)
  w.step(std::vector<int>{kDown, kActionNoOp});  // (3,0)
  w.step(std::vector<int>{kDown, kActionNoOp});  // (4,0)
  w.step(std::vector<int>{kDown, kActionNoOp});  // (5,0)
  CHECK(!w.action_allowed(0, kDown));
  // No-op is always legal.
  CHECK(w.action_allowed(0, kActionNoOp));
}

TEST_CASE("agents cannot move onto each other and collisions block") {
  World w = make_world();
  // Agent 0: (1,1) -> (2,1) -> (3,1) -> (3,2). Agent 1: (3,4) -> (3,3).
  w.step(std::vector<int>{kDown, kLeft});
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kRight, kActionNoOp});
  CHECK(w.agent(0).row == 3);
  CHECK(w.agent(0).col == 2);
  CHECK(w.agent(1).row == 3);
  CHECK(w.agent(1).col == 3);
  // Masks forbid stepping onto an occupied cell.
  CHECK(!w.action_allowed(0, kRight));
  CHECK(!w.action_allowed(1, kLeft));
  // Move them one row up onto the source row, then have agent 0 walk into
  // agent 1's cell: blocked at execution, move labor still charged.
  w.step(std::vector<int>{kUp, kUp});
  CHECK(w.agent(0).row == 2);
  CHECK(w.agent(1).row == 2);
  const double labor_before = w.agent(0).labor_total;
  w.step(std::vector<int>{kRight, kActionNoOp});
  CHECK(w.agent(0).row == 2);
  CHECK(w.agent(0).col == 2);
  CHECK(w.agent(0).labor_total == doctest::Approx(labor_before + 0.21));
}

TEST_CASE("gather then build mints coin and places a house") {
  World w = make_world();
  w.step(std::vector<int>{kRight, kActionNoOp});  // stone at (1,2)
  w.step(std::vector<int>{kDown, kActionNoOp});   // wood at (2,2)
  CHECK(w.wallet(0).stone == 1);
  CHECK(w.wallet(0).wood == 1);
  // Build is masked on source cells.
  CHECK(!w.action_allowed(0, kActionBuild));
  w.step(std::vector<int>{kDown, kActionNoOp});  // (3,2) empty
  CHECK(w.action_allowed(0, kActionBuild));
  const double labor_before = w.agent(0).labor_total;
  w.step(std::vector<int>{kActionBuild, kActionNoOp});
  CHECK(w.wallet(0).stone == 0);
  CHECK(w.wallet(0).wood == 0);
  CHECK(w.wallet(0).coin == doctest::Approx(15.0));
  CHECK(w.agent(0).income_this_year == doctest::Approx(15.0));
  CHECK(w.cell(3, 2).house_owner == 0);
  CHECK(w.agent(0).labor_total == doctest::Approx(labor_before + 2.1));
  // Own house: may re-enter (leave, then walk back on).
  CHECK(!w.action_allowed(0, kActionBuild));  // no inputs and house present
  w.step(std::vector<int>{kLeft, kActionNoOp});
  CHECK(w.action_allowed(0, kRight));  // own house enterable
  // The other agent may not enter agent 0's house cell.
  // (walk agent 1 next to the house first)
  w.step(std::vector<int>{kActionNoOp, kDown});   // (3,4)->(4,4)
  w.step(std::vector<int>{kActionNoOp, kLeft});   // (4,3)
  w.step(std::vector<int>{kActionNoOp, kLeft});   // (4,2)
  CHECK(!w.action_allowed(1, kUp));               // (3,2) is 0's house
}

TEST_CASE("trading through world steps moves coin, units, and income") {
  World w = make_world();
  // Agent 0 collects stone+wood and builds for coin; agent 1 gathers stone.
  w.step(std::vector<int>{kRight, kUp});
  w.step(std::vector<int>{kDown, kLeft});  // agent 1 onto (2,3) stone source
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kActionBuild, kActionNoOp});
  CHECK(w.wallet(0).coin == doctest::Approx(15.0));
  CHECK(w.wallet(1).stone == 2);

  // Agent 1 asks stone at 3; rests.
  const int ask3 = trade_action(market::Side::kAsk, Resource::kStone, 3);
  CHECK(w.action_allowed(1, ask3));
  auto r1 = w.step(std::vector<int>{kActionNoOp, ask3});
  CHECK(r1.trades.empty());
  CHECK(w.wallet(1).stone == 1);  // escrowed

  // Agent 0 bids stone at 5: executes at the resting price 3.
  const int bid5 = trade_action(market::Side::kBid, Resource::kStone, 5);
  const double income0 = w.agent(0).income_this_year;
  const double income1 = w.agent(1).income_this_year;
  auto r2 = w.step(std::vector<int>{bid5, kActionNoOp});
  REQUIRE(r2.trades.size() == 1);
  CHECK(r2.trades[0].price == 3);
  CHECK(w.wallet(0).coin == doctest::Approx(12.0));
  CHECK(w.wallet(0).stone == 1);
  CHECK(w.wallet(1).coin == doctest::Approx(3.0));
  CHECK(w.agent(0).income_this_year == doctest::Approx(income0 - 3.0));
  CHECK(w.agent(1).income_this_year == doctest::Approx(income1 + 3.0));
  // Trade labor charged at submission on both.
  CHECK(w.agent(0).labor_total ==
        doctest::Approx(3 * 0.21 + 2 * 0.21 + 2.1 + 0.05));
  CHECK(w.agent(1).labor_total == doctest::Approx(2 * 0.21 + 0.21 + 0.05));
}

TEST_CASE("bids above wallet coin are masked") {
  World w = make_world();
  // Coin is 0 at reset: every positive-price bid is masked, price-0 legal.
  CHECK(w.action_allowed(0, trade_action(market::Side::kBid, Resource::kWood, 0)));
  for (int p = 1; p <= 10; ++p) {
    CHECK(!w.action_allowed(0, trade_action(market::Side::kBid, Resource::kWood, p)));
  }
  // No units: asks masked.
  CHECK(!w.action_allowed(0, trade_action(market::Side::kAsk, Resource::kWood, 4)));
}

TEST_CASE("respawn waits for the cell to be empty and unoccupied") {
  WorldConfig cfg;
  cfg.respawn_prob = 1.0;  // deterministic regrowth when eligible
  World w(mini(), cfg, 7);
  // Agent 0 steps onto the stone source and stays there.
  w.step(std::vector<int>{kRight, kActionNoOp});
  CHECK(w.cell(1, 2).resource_units == 0);
  w.step(std::vector<int>{kActionNoOp, kActionNoOp});
  CHECK(w.cell(1, 2).resource_units == 0);  // occupied: no regrowth
  w.step(std::vector<int>{kLeft, kActionNoOp});
  CHECK(w.cell(1, 2).resource_units == 1);  // vacated: regrows immediately
}

TEST_CASE("tax year bookkeeping") {
  World w = make_world();
  w.step(std::vector<int>{kRight, kActionNoOp});
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kActionBuild, kActionNoOp});
  auto incomes = w.year_incomes();
  CHECK(incomes[0] == doctest::Approx(15.0));
  CHECK(incomes[1] == doctest::Approx(0.0));
  w.apply_tax_deltas(std::vector<double>{-5.0, 5.0});
  CHECK(w.wallet(0).coin == doctest::Approx(10.0));
  CHECK(w.wallet(1).coin == doctest::Approx(5.0));
  // Settlement is not income; the year counter resets separately.
  CHECK(w.year_incomes()[0] == doctest::Approx(15.0));
  w.begin_new_year();
  CHECK(w.year_incomes()[0] == 0.0);
  CHECK(w.year_incomes()[1] == 0.0);
}

TEST_CASE("identical seeds and action streams replay to identical hashes") {
  // Drive a masked random rollout, then replay the recorded actions on a
  // fresh world with the same seed.
  World w = make_world(0xd5eed);
  Rng policy_rng(0x9999);  // separate stream: must not perturb env state
  std::vector<std::vector<int>> actions;
  std::vector<std::uint64_t> hashes;
  std::vector<float> mask(kNumAgentActions);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> acts(2);
    for (int a = 0; a < 2; ++a) {
      w.action_mask(a, mask);
      int pick;
      do {
        pick = uniform_int(policy_rng, 0, kNumAgentActions - 1);
      } while (mask[pick] == 0.0f);
      acts[a] = pick;
    }
    actions.push_back(acts);
    w.step(acts);
    if (t % 50 == 0) hashes.push_back(w.state_hash());
  }
  const std::uint64_t final_hash = w.state_hash();

  World w2 = make_world(0xd5eed);
  std::size_t h = 0;
  for (int t = 0; t < 300; ++t) {
    w2.step(actions[static_cast<std::size_t>(t)]);
    if (t % 50 == 0) {
      CHECK(w2.state_hash() == hashes[h++]);
    }
  }
  CHECK(w2.state_hash() == final_hash);

  // A different seed diverges (different act order, bonuses, respawns).
  World w3 = make_world(0xd5eee);
  for (int t = 0; t < 300; ++t) {
    // Same stream may hit masked actions on the diverged state; remask.
    std::vector<int> acts = actions[static_cast<std::size_t>(t)];
    for (int a = 0; a < 2; ++a) {
      if (!w3.action_allowed(a, acts[a])) acts[a] = kActionNoOp;
    }
    w3.step(acts);
  }
  CHECK(w3.state_hash() != final_hash);
}

TEST_CASE("observation shapes and padding") {
  World w = make_world();
  obs::TaxContext tax;
  tax.schedule = fiscal::TaxSchedule::us_federal_2018();
  tax.prev_year_incomes = {0.0, 0.0};
  tax.prev_year_rates = {0.0, 0.0};
  tax.t = 0;

  std::vector<double> spatial(obs::spatial_size(w.config()));
  obs::write_agent_spatial(w, 0, spatial);
  const int win = obs::spatial_window(w.config());
  CHECK(win == 11);
  // Agent 0 sits at (1,1); rows above the grid are zero padding in every
  // channel. Window row 0..3 map to grid rows -4..-1: all zeros.
  bool padded_zero = true;
  for (int ch = 0; ch < obs::kSpatialChannels; ++ch) {
    for (int wr = 0; wr < 4; ++wr) {
      for (int wc = 0; wc < win; ++wc) {
        padded_zero &= spatial[static_cast<std::size_t>(ch * win * win + wr * win + wc)] == 0.0;
      }
    }
  }
  CHECK(padded_zero);
  // Water at (0,0) appears at window (4,4) in channel 0.
  CHECK(spatial[4 * win + 4] == 1.0);
  // Stone source at (1,2) -> window (5,6), channel 1, stocked in channel 3.
  CHECK(spatial[1 * win * win + 5 * win + 6] == 1.0);
  CHECK(spatial[3 * win * win + 5 * win + 6] == 1.0);
  // Agent 1 at (3,4) is inside the window at (7,8), channel 7.
  CHECK(spatial[7 * win * win + 7 * win + 8] == 1.0);

  std::vector<double> flat(obs::agent_flat_size(2));
  obs::write_agent_flat(w, 0, tax, flat);
  std::vector<double> planner(obs::planner_flat_size(2));
  obs::write_planner_flat(w, tax, planner);
  CHECK(flat.size() == 3 + 2 + 112 + 7 + 2 + 2 + 1);
  CHECK(planner.size() == 6 + 68 + 7 + 2 + 4);
}

TEST_CASE("planner observation carries no skill information") {
  // Two worlds identical except for skills: the planner views must match
  // exactly, the agents' own views must not.
  auto spec_a = mini();
  auto spec_b = mini();
  spec_b.build_skills = {29.0, 11.0};
  spec_b.gather_skills = {0.5, 0.25};
  World wa(spec_a, WorldConfig{}, 3);
  World wb(spec_b, WorldConfig{}, 3);

  obs::TaxContext tax;
  tax.schedule = fiscal::TaxSchedule::free_market();
  tax.prev_year_incomes = {10.0, 20.0};
  tax.prev_year_rates = {0.1, 0.2};

  std::vector<double> pa(obs::planner_flat_size(2)), pb(obs::planner_flat_size(2));
  obs::write_planner_flat(wa, tax, pa);
  obs::write_planner_flat(wb, tax, pb);
  CHECK(pa == pb);

  std::vector<double> fa(obs::agent_flat_size(2)), fb(obs::agent_flat_size(2));
  obs::write_agent_flat(wa, 0, tax, fa);
  obs::write_agent_flat(wb, 0, tax, fb);
  CHECK(fa != fb);
}

TEST_CASE("own marginal rate tracks income within the year") {
  World w = make_world();
  obs::TaxContext tax;
  tax.schedule = fiscal::TaxSchedule::us_federal_2018();
  tax.prev_year_incomes = {0.0, 0.0};
  tax.prev_year_rates = {0.0, 0.0};
  std::vector<double> flat(obs::agent_flat_size(2));
  obs::write_agent_flat(w, 0, tax, flat);
  CHECK(flat.back() == doctest::Approx(0.10));  // no income yet
  // Build twice (skill 15): income 15 -> bracket 2 boundary checks later;
  // first check after one build: 9 < 15 <= 39 -> 0.12.
  w.step(std::vector<int>{kRight, kActionNoOp});
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kDown, kActionNoOp});
  w.step(std::vector<int>{kActionBuild, kActionNoOp});
  obs::write_agent_flat(w, 0, tax, flat);
  CHECK(flat.back() == doctest::Approx(0.12));
}
