#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "gtb/env.hpp"
#include "gtb/fiscal.hpp"
#include "gtb/obs.hpp"
#include "gtb/scenario.hpp"
#include "gtb/welfare.hpp"
#include "pocket.hpp"

using namespace gtb;
using pocket::kBuildScript;
using pocket::make_pocket;
using pocket::pocket_config;

namespace {

int sample_masked(const Eigen::VectorXd& mask, Rng& rng) {
  int allowed = 0;
  for (int a = 0; a < mask.size(); ++a)
    if (mask[a] > 0.5) ++allowed;
  REQUIRE(allowed > 0);
  int k = uniform_int(rng, 0, allowed - 1);
  for (int a = 0; a < mask.size(); ++a) {
    if (mask[a] > 0.5 && k-- == 0) return a;
  }
  return 0;
}

std::vector<int> random_agent_actions(env::Env& e, Rng& rng) {
  std::vector<int> acts(static_cast<std::size_t>(e.num_agents()));
  Eigen::VectorXd mask;
  for (int i = 0; i < e.num_agents(); ++i) {
    e.agent_action_mask(i, mask);
    acts[static_cast<std::size_t>(i)] = sample_masked(mask, rng);
  }
  return acts;
}

std::vector<int> random_planner_actions(env::Env& e, Rng& rng) {
  std::vector<int> acts;
  for (const Eigen::VectorXd& mask : e.planner_action_masks())
    acts.push_back(sample_masked(mask, rng));
  return acts;
}

double total_coin(const world::World& w) {
  double sum = 0.0;
  for (int i = 0; i < w.num_agents(); ++i)
    sum += w.wallet(i).coin + w.book().escrow(i).coin;
  return sum;
}

double minted_coin(const world::World& w) {
  double sum = 0.0;
  for (int r = 0; r < w.height(); ++r) {
    for (int c = 0; c < w.width(); ++c) {
      int owner = w.cell(r, c).house_owner;
      if (owner >= 0) sum += w.agent(owner).build_skill;
    }
  }
  return sum;
}

scenario::ScenarioSpec load_shipped(const std::string& name) {
  return scenario::load_scenario(std::string(GTB_SCENARIO_DIR) + "/" + name +
                                 ".txt");
}

}  // namespace

TEST_CASE("shipped scenario files parse and follow their layout contracts") {
  struct Expect {
    const char* name;
    int size;
    int agents;
  };
  const Expect quadrant[] = {{"open-quadrant-4", 25, 4},
                             {"open-quadrant-4-desk", 15, 4},
                             {"open-quadrant-10", 40, 10}};
  for (const Expect& q : quadrant) {
    CAPTURE(q.name);
    scenario::ScenarioSpec s = load_shipped(q.name);
    CHECK(s.height == q.size);
    CHECK(s.width == q.size);
    CHECK(s.num_agents == q.agents);
    CHECK(std::is_sorted(s.build_skills.begin(), s.build_skills.end()));
    CHECK(s.build_skills.front() >= 10.0);
    CHECK(s.build_skills.back() <= 30.0);
    for (double g : s.gather_skills) {
      CHECK(g >= 0.0);
      CHECK(g <= 0.5);
    }
    // Four quadrants around the water cross: both / wood only / stone only /
    // nothing.
    const int mid = q.size / 2;
    auto census = [&](int r0, int r1, int c0, int c1) {
      int stone = 0, wood = 0;
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
          if (s.at(r, c) == scenario::Terrain::kStoneSource) ++stone;
          if (s.at(r, c) == scenario::Terrain::kWoodSource) ++wood;
        }
      return std::pair{stone, wood};
    };
    auto [tl_s, tl_w] = census(0, mid - 1, 0, mid - 1);
    auto [tr_s, tr_w] = census(0, mid - 1, mid + 1, q.size - 1);
    auto [bl_s, bl_w] = census(mid + 1, q.size - 1, 0, mid - 1);
    auto [br_s, br_w] = census(mid + 1, q.size - 1, mid + 1, q.size - 1);
    CHECK(tl_s > 0);
    CHECK(tl_w > 0);
    CHECK(tr_s == 0);
    CHECK(tr_w > 0);
    CHECK(bl_s > 0);
    CHECK(bl_w == 0);
    CHECK(br_s == 0);
    CHECK(br_w == 0);
    // The cross leaves passages: both water lines have gaps.
    int row_gaps = 0, col_gaps = 0;
    for (int c = 0; c < q.size; ++c)
      if (s.at(mid, c) != scenario::Terrain::kWater) ++row_gaps;
    for (int r = 0; r < q.size; ++r)
      if (s.at(r, mid) != scenario::Terrain::kWater) ++col_gaps;
    CHECK(row_gaps == 2);
    CHECK(col_gaps == 2);
  }

  // Split worlds: a full-width water band, wood only above it, and the named
  // build-skill ranks (1 = highest) starting in the top half.
  struct Split {
    const char* name;
    std::vector<int> top_ranks;
  };
  const Split splits[] = {{"split-world-123", {1, 2, 3}},
                          {"split-world-12", {1, 2}},
                          {"split-world-56", {5, 6}},
                          {"split-world-8910", {8, 9, 10}}};
  for (const Split& v : splits) {
    CAPTURE(v.name);
    scenario::ScenarioSpec s = load_shipped(v.name);
    CHECK(s.num_agents == 10);
    for (int c = 0; c < s.width; ++c) {
      CHECK(s.at(19, c) == scenario::Terrain::kWater);
      CHECK(s.at(20, c) == scenario::Terrain::kWater);
    }
    int top_wood = 0, bottom_wood = 0, top_stone = 0, bottom_stone = 0;
    for (int r = 0; r < s.height; ++r)
      for (int c = 0; c < s.width; ++c) {
        if (s.at(r, c) == scenario::Terrain::kWoodSource)
          (r < 19 ? top_wood : bottom_wood)++;
        if (s.at(r, c) == scenario::Terrain::kStoneSource)
          (r < 19 ? top_stone : bottom_stone)++;
      }
    CHECK(top_wood > 0);
    CHECK(top_stone > 0);
    CHECK(bottom_stone > 0);
    CHECK(bottom_wood == 0);
    for (int i = 0; i < 10; ++i) {
      // skills are ascending, so rank r (1 = highest) is agent 10 - r
      const int rank = 10 - i;
      const bool should_top =
          std::count(v.top_ranks.begin(), v.top_ranks.end(), rank) > 0;
      CHECK((s.start_row[static_cast<std::size_t>(i)] < 19) == should_top);
    }
  }
}

TEST_CASE("a free-market year leaves settlement a no-op") {
  env::Env e = make_pocket(env::PlannerKind::kFreeMarket, 11);
  Rng rng(7);
  // Earn some income during the year, then settle on an all-noop step so the
  // only coin movement could come from the settlement itself.
  for (int t = 0; t < 19; ++t) e.step(random_agent_actions(e, rng), {});
  std::vector<double> before = e.world().coin_endowments();
  std::vector<int> noop(2, world::kActionNoOp);
  env::StepOutputs out = e.step(noop, {});
  CHECK(out.tax_settled);
  std::vector<double> after = e.world().coin_endowments();
  for (int i = 0; i < 2; ++i)
    CHECK(after[static_cast<std::size_t>(i)] ==
          doctest::Approx(before[static_cast<std::size_t>(i)]).epsilon(1e-12));
  for (double r : e.schedule().rates) CHECK(r == 0.0);
}

TEST_CASE("the federal schedule applies at year start and honors the cap") {
  env::Env e = make_pocket(env::PlannerKind::kUsFederal, 11);
  std::vector<int> noop(2, world::kActionNoOp);
  e.step(noop, {});
  CHECK(e.schedule() == fiscal::TaxSchedule::us_federal_2018());

  CurriculumState mid = curriculum_done();
  mid.tax_cap = 0.10;
  env::Env capped = make_pocket(env::PlannerKind::kUsFederal, 11);
  capped.set_curriculum(mid);
  capped.step(noop, {});
  const fiscal::TaxSchedule fed = fiscal::TaxSchedule::us_federal_2018();
  for (int b = 0; b < fiscal::kNumBrackets; ++b)
    CHECK(capped.schedule().rates[static_cast<std::size_t>(b)] ==
          doctest::Approx(std::min(fed.rates[static_cast<std::size_t>(b)], 0.10)));
}

TEST_CASE("phase-one curriculum turns taxes off and scales labor disutility") {
  CurriculumConfig ccfg;
  CurriculumState early = curriculum_at(ccfg, 0);
  env::Env e = make_pocket(env::PlannerKind::kUsFederal, 11);
  e.set_curriculum(early);
  std::vector<int> noop(2, world::kActionNoOp);
  e.step(noop, {});
  for (double r : e.schedule().rates) CHECK(r == 0.0);

  // With the labor multiplier at zero, utility ignores labor entirely.
  env::Env walk = make_pocket(env::PlannerKind::kFreeMarket, 11);
  walk.set_curriculum(early);
  std::vector<int> move(2, world::kActionMoveBase);  // both try to move up
  walk.step(move, {});
  const double coin_only =
      welfare::isoelastic_utility(0.0, 0.0, welfare::kDefaultEta);
  for (double u : walk.utilities()) CHECK(u == doctest::Approx(coin_only));
}

TEST_CASE("learned planner masks track the tax cap and the year cycle") {
  env::Env e = make_pocket(env::PlannerKind::kLearned, 11);
  CurriculumState st = curriculum_done();
  st.tax_cap = 0.10;
  e.set_curriculum(st);

  std::vector<Eigen::VectorXd> masks = e.planner_action_masks();
  REQUIRE(masks.size() == fiscal::kNumBrackets);
  for (const Eigen::VectorXd& m : masks) {
    REQUIRE(m.size() == env::kPlannerActionsPerBracket);
    CHECK(m.sum() == doctest::Approx(4.0));  // rates {0, .05, .10} + keep
    CHECK(m[0] == 1.0);
    CHECK(m[1] == 1.0);
    CHECK(m[2] == 1.0);
    CHECK(m[3] == 0.0);
    CHECK(m[env::kPlannerKeep] == 1.0);
  }

  // Off-cycle steps only allow keep.
  std::vector<int> noop(2, world::kActionNoOp);
  std::vector<int> low(fiscal::kNumBrackets, 2);
  e.step(noop, low);
  for (const Eigen::VectorXd& m : e.planner_action_masks()) {
    CHECK(m.sum() == doctest::Approx(1.0));
    CHECK(m[env::kPlannerKeep] == 1.0);
  }

  // Taxes disabled: keep-only even on the year boundary.
  env::Env off = make_pocket(env::PlannerKind::kLearned, 11);
  CurriculumConfig ccfg;
  off.set_curriculum(curriculum_at(ccfg, 0));
  for (const Eigen::VectorXd& m : off.planner_action_masks())
    CHECK(m.sum() == doctest::Approx(1.0));
}

TEST_CASE("learned rates apply on the boundary, clamp to the cap, and keep preserves them") {
  env::Env e = make_pocket(env::PlannerKind::kLearned, 11);
  e.set_curriculum(curriculum_done());
  std::vector<int> noop(2, world::kActionNoOp);

  const std::vector<int> year0 = {0, 4, 8, 12, 16, 20, 2};
  e.step(noop, year0);
  for (int b = 0; b < fiscal::kNumBrackets; ++b)
    CHECK(e.schedule().rates[static_cast<std::size_t>(b)] ==
          doctest::Approx(year0[static_cast<std::size_t>(b)] * 0.05));

  // The schedule holds within the year and a keep-everything planner leaves
  // it untouched at the next boundary.
  for (int t = 1; t < 20; ++t) e.step(noop, {});
  std::vector<int> keep(fiscal::kNumBrackets, env::kPlannerKeep);
  e.step(noop, keep);
  for (int b = 0; b < fiscal::kNumBrackets; ++b)
    CHECK(e.schedule().rates[static_cast<std::size_t>(b)] ==
          doctest::Approx(year0[static_cast<std::size_t>(b)] * 0.05));

  // Under a 0.10 cap even a max-rate planner lands on 0.10 everywhere.
  env::Env capped = make_pocket(env::PlannerKind::kLearned, 11);
  CurriculumState st = curriculum_done();
  st.tax_cap = 0.10;
  capped.set_curriculum(st);
  std::vector<int> maxed(fiscal::kNumBrackets, 2);  // 0.10, top of the mask
  capped.step(noop, maxed);
  for (double r : capped.schedule().rates) CHECK(r == doctest::Approx(0.10));
}

TEST_CASE("coin is conserved through trades, escrow, and tax settlement") {
  env::Env e = make_pocket(env::PlannerKind::kUsFederal, 5);
  Rng rng(13);
  int settles = 0;
  for (int t = 0; t < 60; ++t) {
    // Scripted builds up front put real coin in play; random play after.
    std::vector<int> acts =
        t < 5 ? std::vector<int>(2, kBuildScript[static_cast<std::size_t>(t)])
              : random_agent_actions(e, rng);
    env::StepOutputs out = e.step(acts, {});
    settles += out.tax_settled ? 1 : 0;
    CHECK(total_coin(e.world()) ==
          doctest::Approx(minted_coin(e.world())).epsilon(1e-9));
    CHECK(out.episode_done == (t == 59));
  }
  CHECK(settles == 3);
  // Both scripted builds happened, otherwise the invariant was vacuous.
  CHECK(minted_coin(e.world()) >= 30.0);
  CHECK_THROWS_AS(e.step(std::vector<int>(2, 0), {}), ContractViolation);
}

TEST_CASE("rewards telescope to the change in utility and welfare") {
  env::Env e = make_pocket(env::PlannerKind::kUsFederal, 29);
  Rng rng(3);
  const std::vector<double> u0 = e.utilities();
  const double swf0 = e.social_welfare_now();
  std::vector<double> reward_sum(2, 0.0);
  double planner_sum = 0.0;
  for (int t = 0; t < 40; ++t) {
    env::StepOutputs out = e.step(random_agent_actions(e, rng), {});
    for (int i = 0; i < 2; ++i)
      reward_sum[static_cast<std::size_t>(i)] +=
          out.agent_rewards[static_cast<std::size_t>(i)];
    planner_sum += out.planner_reward;
  }
  const std::vector<double> u1 = e.utilities();
  for (int i = 0; i < 2; ++i)
    CHECK(u0[static_cast<std::size_t>(i)] +
              reward_sum[static_cast<std::size_t>(i)] ==
          doctest::Approx(u1[static_cast<std::size_t>(i)]).epsilon(1e-9));
  CHECK(swf0 + planner_sum ==
        doctest::Approx(e.social_welfare_now()).epsilon(1e-9));
}

TEST_CASE("saez planner starts free-market and then follows recorded incomes") {
  env::Env e = make_pocket(env::PlannerKind::kSaez, 17);
  std::vector<int> noop(2, world::kActionNoOp);

  e.step(std::vector<int>(2, kBuildScript[0]), {});
  for (double r : e.schedule().rates) CHECK(r == 0.0);  // no history yet
  CHECK(e.income_buffer().empty());

  for (int t = 1; t < 5; ++t)
    e.step(std::vector<int>(2, kBuildScript[static_cast<std::size_t>(t)]), {});
  for (int t = 5; t < 20; ++t) e.step(noop, {});
  REQUIRE(e.income_buffer().size() == 2);  // one earner-record per agent-year
  std::vector<double> hist = e.income_buffer().incomes();
  CHECK(std::accumulate(hist.begin(), hist.end(), 0.0) == doctest::Approx(30.0));

  // Year two's schedule must match the formula applied to the buffer.
  const fiscal::TaxSchedule expect =
      fiscal::saez_rates(e.income_buffer(), e.config().saez);
  e.step(noop, {});
  CHECK(e.schedule() == expect);

  // History survives reset, the schedule does not.
  const std::size_t kept = e.income_buffer().size();
  e.reset(18);
  CHECK(e.t() == 0);
  CHECK(e.income_buffer().size() == kept);
  for (double r : e.schedule().rates) CHECK(r == 0.0);
  CHECK(e.episode_index() == 1);
}

TEST_CASE("identically seeded environments stay in lockstep") {
  env::Env a = make_pocket(env::PlannerKind::kLearned, 99);
  env::Env b = make_pocket(env::PlannerKind::kLearned, 99);
  a.set_curriculum(curriculum_done());
  b.set_curriculum(curriculum_done());
  Rng rng(55);
  for (int t = 0; t < 40; ++t) {
    std::vector<int> acts = random_agent_actions(a, rng);
    std::vector<int> pacts = random_planner_actions(a, rng);
    env::StepOutputs oa = a.step(acts, pacts);
    env::StepOutputs ob = b.step(acts, pacts);
    REQUIRE(a.state_hash() == b.state_hash());
    REQUIRE(oa.agent_rewards == ob.agent_rewards);
    REQUIRE(oa.planner_reward == ob.planner_reward);
  }
}

TEST_CASE("observation buffers match the advertised sizes") {
  env::Env e = make_pocket(env::PlannerKind::kLearned, 31);
  Eigen::VectorXd spatial, flat;
  e.agent_observation(0, spatial, flat);
  CHECK(spatial.size() == obs::spatial_size(e.world().config()));
  CHECK(flat.size() == obs::agent_flat_size(e.num_agents()));
  Eigen::VectorXd pf;
  e.planner_observation(pf);
  CHECK(pf.size() == obs::planner_flat_size(e.num_agents()));
  Eigen::VectorXd mask;
  e.agent_action_mask(0, mask);
  CHECK(mask.size() == world::kNumAgentActions);
}

TEST_CASE("env configuration is validated") {
  scenario::ScenarioSpec spec = scenario::parse_scenario(pocket::kPocket);
  env::EnvConfig cfg = pocket_config(env::PlannerKind::kFreeMarket);
  cfg.episode_len = 50;  // not a whole number of 20-step years
  CHECK_THROWS_AS(env::Env(spec, cfg, 1), ConfigError);
  CHECK_THROWS_AS(env::parse_planner_kind("laissez-faire"), ConfigError);
  for (env::PlannerKind k :
       {env::PlannerKind::kFreeMarket, env::PlannerKind::kUsFederal,
        env::PlannerKind::kSaez, env::PlannerKind::kLearned})
    CHECK(env::parse_planner_kind(env::planner_kind_name(k)) == k);
}
