#pragma once

#include <span>
#include <vector>

#include "gtb/fiscal.hpp"
#include "gtb/rng.hpp"

namespace gtb::onestep {

// Single-decision economy with closed-form agents: each agent picks labor
// once, income is labor times skill, and utility is quasilinear in post-tax
// coin with a power labor cost. Because best responses are exact, this
// economy isolates the planner problem from agent learning noise.
struct OneStepConfig {
  int num_agents = 100;
  double skill_min = 1.24;
  double skill_max = 159.1;
  double max_labor = 100.0;
  double labor_cost = 0.0005;     // c in c * l^delta
  double labor_exponent = 3.5;    // delta, > 1 so labor cost is convex
};

// Skills drawn log-uniformly on [skill_min, skill_max]; only the endpoints
// of the distribution are pinned, the shape is a reproducibility choice.
std::vector<double> log_uniform_skills(const OneStepConfig& config, Rng& rng);

// argmax over l in [0, max_labor] of  skill*l - T(skill*l) - c*l^delta.
// The lump-sum rebate does not depend on own labor, so it is omitted.
// Within one bracket segment the objective is strictly concave with a
// closed-form stationary point; the maximum is the best clamped stationary
// point across the seven segments.
double best_response_labor(double skill, const fiscal::TaxSchedule& schedule,
                           const OneStepConfig& config);

// Brute-force reference: dense labor grid at `step` plus a fine rescan
// around the winning cell. Slower than best_response_labor, used to
// cross-check it.
double best_response_labor_scan(double skill, const fiscal::TaxSchedule& schedule,
                                const OneStepConfig& config, double step = 0.01);

struct OneStepOutcome {
  std::vector<double> labor;
  std::vector<double> pre_tax;    // z_i = l_i * skill_i
  std::vector<double> post_tax;   // z_i - T(z_i) + mean tax
  std::vector<double> utility;    // post_tax_i - c * l_i^delta
  double swf = 0.0;               // inverse-income-weighted utilitarian
  double total_income = 0.0;      // sum of pre-tax incomes
};

OneStepOutcome run_one_step(const OneStepConfig& config,
                            std::span<const double> skills,
                            const fiscal::TaxSchedule& schedule);

// Iterates schedule -> best responses -> tax formula until the rates stop
// moving. Damping keeps the iteration from overshooting when the income
// distribution reacts strongly to a rate change.
struct SaezFixedPointResult {
  fiscal::TaxSchedule schedule;
  int iterations = 0;
  bool converged = false;
};

SaezFixedPointResult saez_fixed_point(const OneStepConfig& config,
                                      std::span<const double> skills,
                                      double elasticity, int max_iters = 80,
                                      double damping = 0.5, double tol = 0.01);

// REINFORCE bandit over the discrete rate grid: seven independent softmax
// heads, one per bracket, each over the 21 grid rates. Rewards are exact
// (best-response agents), so a modest batch suffices.
struct BanditConfig {
  int iterations = 1500;
  int batch = 24;
  double lr = 0.08;
  double entropy_coef = 0.01;     // annealed linearly to 0
};

struct LearnedPlannerResult {
  fiscal::TaxSchedule schedule;   // greedy argmax of the trained policy
  double welfare = 0.0;
  std::vector<double> welfare_trace;  // batch-mean welfare per iteration
};

LearnedPlannerResult learn_planner(const OneStepConfig& config,
                                   std::span<const double> skills,
                                   const BanditConfig& bandit, Rng& rng);

// Greedy sweep over brackets: for each bracket try every grid rate holding
// the others fixed, keep the best, repeat until a full sweep makes no
// improvement. Deterministic cross-check for the learned planner.
struct CoordinateAscentResult {
  fiscal::TaxSchedule schedule;
  double welfare = 0.0;
  int sweeps = 0;
};

CoordinateAscentResult coordinate_ascent(const OneStepConfig& config,
                                         std::span<const double> skills,
                                         const fiscal::TaxSchedule& start,
                                         int max_sweeps = 25);

// Runs a flat-tax sweep and fits log total income against log(1-tau).
// With the power labor cost the true elasticity is 1/(delta-1).
double elasticity_from_flat_sweep(const OneStepConfig& config,
                                  std::span<const double> skills,
                                  std::span<const double> flat_rates);

}  // namespace gtb::onestep
