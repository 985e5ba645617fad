#include "gtb/onestep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "gtb/common.hpp"
#include "gtb/welfare.hpp"

namespace gtb::onestep {

namespace {

void validate(const OneStepConfig& c) {
  if (c.num_agents < 1) throw ContractViolation("one-step: num_agents < 1");
  if (!(c.skill_min > 0.0) || !(c.skill_max >= c.skill_min)) {
    throw ContractViolation("one-step: bad skill range");
  }
  if (!(c.max_labor > 0.0)) throw ContractViolation("one-step: max_labor <= 0");
  if (!(c.labor_cost > 0.0)) throw ContractViolation("one-step: labor_cost <= 0");
  if (!(c.labor_exponent > 1.0)) {
    throw ContractViolation("one-step: labor_exponent must exceed 1");
  }
}

// Own-labor utility, lump-sum rebate excluded.
double own_objective(double l, double skill, const fiscal::TaxSchedule& schedule,
                     const OneStepConfig& c) {
  const double z = skill * l;
  return z - schedule.tax_owed(z) - c.labor_cost * std::pow(l, c.labor_exponent);
}

}  // namespace

std::vector<double> log_uniform_skills(const OneStepConfig& config, Rng& rng) {
  validate(config);
  const double lo = std::log(config.skill_min);
  const double hi = std::log(config.skill_max);
  std::vector<double> skills(config.num_agents);
  for (double& s : skills) s = std::exp(uniform_real(rng, lo, hi));
  return skills;
}

double best_response_labor(double skill, const fiscal::TaxSchedule& schedule,
                           const OneStepConfig& config) {
  validate(config);
  if (!(skill > 0.0)) throw ContractViolation("one-step: skill <= 0");

  // Within one bracket segment the marginal rate is constant, so the
  // objective is concave with stationary point (net wage / c*delta)^(1/(delta-1)).
  // The global maximum is the best clamped stationary point across segments.
  double best_l = 0.0;
  double best_f = own_objective(0.0, skill, schedule, config);
  for (int j = 0; j < fiscal::kNumBrackets; ++j) {
    const double lo = std::min(fiscal::kBracketCutoffs[j] / skill, config.max_labor);
    const double hi = j + 1 < fiscal::kNumBrackets
                          ? std::min(fiscal::kBracketCutoffs[j + 1] / skill,
                                     config.max_labor)
                          : config.max_labor;
    if (hi <= lo) continue;
    const double net = skill * (1.0 - schedule.rates[j]);
    double l = lo;
    if (net > 0.0) {
      l = std::clamp(std::pow(net / (config.labor_cost * config.labor_exponent),
                              1.0 / (config.labor_exponent - 1.0)),
                     lo, hi);
    }
    const double f = own_objective(l, skill, schedule, config);
    if (f > best_f) {
      best_f = f;
      best_l = l;
    }
  }
  return best_l;
}

double best_response_labor_scan(double skill, const fiscal::TaxSchedule& schedule,
                                const OneStepConfig& config, double step) {
  validate(config);
  if (!(step > 0.0)) throw ContractViolation("one-step: scan step <= 0");
  double best_l = 0.0;
  double best_f = -std::numeric_limits<double>::infinity();
  for (double l = 0.0; l <= config.max_labor + step / 2; l += step) {
    const double lc = std::min(l, config.max_labor);
    const double f = own_objective(lc, skill, schedule, config);
    if (f > best_f) {
      best_f = f;
      best_l = lc;
    }
  }
  const double lo = std::max(0.0, best_l - step);
  const double hi = std::min(config.max_labor, best_l + step);
  const double fine = step * 1e-3;
  for (double l = lo; l <= hi + fine / 2; l += fine) {
    const double lc = std::min(l, config.max_labor);
    const double f = own_objective(lc, skill, schedule, config);
    if (f > best_f) {
      best_f = f;
      best_l = lc;
    }
  }
  return best_l;
}

OneStepOutcome run_one_step(const OneStepConfig& config,
                            std::span<const double> skills,
                            const fiscal::TaxSchedule& schedule) {
  validate(config);
  if (skills.empty()) throw ContractViolation("one-step: no skills");
  OneStepOutcome out;
  const std::size_t n = skills.size();
  out.labor.resize(n);
  out.pre_tax.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labor[i] = best_response_labor(skills[i], schedule, config);
    out.pre_tax[i] = skills[i] * out.labor[i];
    out.total_income += out.pre_tax[i];
  }
  const std::vector<double> delta = fiscal::settle_tax_year(out.pre_tax, schedule);
  out.post_tax.resize(n);
  out.utility.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.post_tax[i] = out.pre_tax[i] + delta[i];
    out.utility[i] = out.post_tax[i] -
                     config.labor_cost * std::pow(out.labor[i], config.labor_exponent);
  }
  out.swf = welfare::utilitarian_swf(out.utility, out.pre_tax);
  return out;
}

SaezFixedPointResult saez_fixed_point(const OneStepConfig& config,
                                      std::span<const double> skills,
                                      double elasticity, int max_iters,
                                      double damping, double tol) {
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw ContractViolation("saez_fixed_point: damping must be in [0,1)");
  }
  SaezFixedPointResult result;
  result.schedule = fiscal::TaxSchedule::free_market();
  fiscal::SaezParams params;
  params.elasticity = elasticity;
  // The empirical histogram makes the map slightly discontinuous: rates jump
  // when a best-response income crosses a bin edge, so the damped iteration
  // ends in a small limit cycle rather than an exact fixed point. Converged
  // means a self-consistent schedule: recomputing the formula under it moves
  // no rate by more than tol. Otherwise the least inconsistent iterate wins.
  double best_resid = std::numeric_limits<double>::infinity();
  fiscal::TaxSchedule best = result.schedule;
  for (int it = 0; it < max_iters; ++it) {
    const OneStepOutcome out = run_one_step(config, skills, result.schedule);
    bool any_positive = false;
    for (double z : out.pre_tax) any_positive = any_positive || z > 0.0;
    if (!any_positive) break;  // fully confiscatory interim schedule; keep it
    const fiscal::TaxSchedule next =
        fiscal::saez_rates_from_incomes(out.pre_tax, params);
    double resid = 0.0;
    for (int j = 0; j < fiscal::kNumBrackets; ++j) {
      resid = std::max(resid,
                       std::fabs(next.rates[j] - result.schedule.rates[j]));
    }
    result.iterations = it + 1;
    if (resid < best_resid) {
      best_resid = resid;
      best = result.schedule;
    }
    if (resid < tol) {
      result.converged = true;
      return result;
    }
    for (int j = 0; j < fiscal::kNumBrackets; ++j) {
      result.schedule.rates[j] = damping * result.schedule.rates[j] +
                                 (1.0 - damping) * next.rates[j];
    }
  }
  result.schedule = best;
  return result;
}

LearnedPlannerResult learn_planner(const OneStepConfig& config,
                                   std::span<const double> skills,
                                   const BanditConfig& bandit, Rng& rng) {
  if (bandit.iterations < 1 || bandit.batch < 1) {
    throw ContractViolation("learn_planner: bad bandit config");
  }
  constexpr int kB = fiscal::kNumBrackets;
  constexpr int kA = fiscal::kRateGridSize;
  std::array<std::array<double, kA>, kB> logits{};
  std::array<std::array<double, kA>, kB> m{}, v{};  // Adam state
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int adam_t = 0;

  LearnedPlannerResult result;
  std::vector<std::array<int, kB>> actions(bandit.batch);
  std::vector<double> rewards(bandit.batch);

  for (int it = 0; it < bandit.iterations; ++it) {
    std::array<std::array<double, kA>, kB> probs;
    for (int j = 0; j < kB; ++j) {
      double mx = logits[j][0];
      for (double x : logits[j]) mx = std::max(mx, x);
      double zsum = 0.0;
      for (int a = 0; a < kA; ++a) {
        probs[j][a] = std::exp(logits[j][a] - mx);
        zsum += probs[j][a];
      }
      for (int a = 0; a < kA; ++a) probs[j][a] /= zsum;
    }

    double mean_r = 0.0;
    for (int b = 0; b < bandit.batch; ++b) {
      fiscal::TaxSchedule sched;
      for (int j = 0; j < kB; ++j) {
        double u = uniform01(rng), acc = 0.0;
        int pick = kA - 1;
        for (int a = 0; a < kA; ++a) {
          acc += probs[j][a];
          if (u < acc) {
            pick = a;
            break;
          }
        }
        actions[b][j] = pick;
        sched.rates[j] = pick * fiscal::kRateGridStep;
      }
      rewards[b] = run_one_step(config, skills, sched).swf;
      mean_r += rewards[b];
    }
    mean_r /= bandit.batch;
    result.welfare_trace.push_back(mean_r);

    double var = 0.0;
    for (double r : rewards) var += (r - mean_r) * (r - mean_r);
    const double sd = std::sqrt(var / bandit.batch) + 1e-8;

    // REINFORCE with the batch mean as baseline, plus an annealed entropy
    // bonus to keep early exploration alive.
    const double ent_coef =
        bandit.entropy_coef * (1.0 - static_cast<double>(it) / bandit.iterations);
    std::array<std::array<double, kA>, kB> grad{};
    for (int b = 0; b < bandit.batch; ++b) {
      const double adv = (rewards[b] - mean_r) / sd;
      for (int j = 0; j < kB; ++j) {
        for (int a = 0; a < kA; ++a) {
          const double ind = a == actions[b][j] ? 1.0 : 0.0;
          grad[j][a] += adv * (ind - probs[j][a]) / bandit.batch;
        }
      }
    }
    for (int j = 0; j < kB; ++j) {
      double ent = 0.0;
      for (int a = 0; a < kA; ++a) {
        if (probs[j][a] > 0.0) ent -= probs[j][a] * std::log(probs[j][a]);
      }
      for (int a = 0; a < kA; ++a) {
        if (probs[j][a] > 0.0) {
          grad[j][a] += ent_coef * (-probs[j][a] * (std::log(probs[j][a]) + ent));
        }
      }
    }

    ++adam_t;
    const double bc1 = 1.0 - std::pow(beta1, adam_t);
    const double bc2 = 1.0 - std::pow(beta2, adam_t);
    for (int j = 0; j < kB; ++j) {
      for (int a = 0; a < kA; ++a) {
        m[j][a] = beta1 * m[j][a] + (1.0 - beta1) * grad[j][a];
        v[j][a] = beta2 * v[j][a] + (1.0 - beta2) * grad[j][a] * grad[j][a];
        logits[j][a] += bandit.lr * (m[j][a] / bc1) /
                        (std::sqrt(v[j][a] / bc2) + eps);
      }
    }
  }

  for (int j = 0; j < kB; ++j) {
    int best_a = 0;
    for (int a = 1; a < kA; ++a) {
      if (logits[j][a] > logits[j][best_a]) best_a = a;
    }
    result.schedule.rates[j] = best_a * fiscal::kRateGridStep;
  }
  result.welfare = run_one_step(config, skills, result.schedule).swf;
  return result;
}

CoordinateAscentResult coordinate_ascent(const OneStepConfig& config,
                                         std::span<const double> skills,
                                         const fiscal::TaxSchedule& start,
                                         int max_sweeps) {
  CoordinateAscentResult result;
  result.schedule = start;
  result.welfare = run_one_step(config, skills, result.schedule).swf;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (int j = 0; j < fiscal::kNumBrackets; ++j) {
      const double keep = result.schedule.rates[j];
      double best_rate = keep;
      double best_w = result.welfare;
      for (int a = 0; a < fiscal::kRateGridSize; ++a) {
        const double rate = a * fiscal::kRateGridStep;
        if (rate == keep) continue;
        result.schedule.rates[j] = rate;
        const double w = run_one_step(config, skills, result.schedule).swf;
        if (w > best_w) {
          best_w = w;
          best_rate = rate;
        }
      }
      result.schedule.rates[j] = best_rate;
      if (best_rate != keep) {
        result.welfare = best_w;
        improved = true;
      }
    }
    result.sweeps = sweep + 1;
    if (!improved) break;
  }
  return result;
}

double elasticity_from_flat_sweep(const OneStepConfig& config,
                                  std::span<const double> skills,
                                  std::span<const double> flat_rates) {
  if (flat_rates.size() < 2) {
    throw ContractViolation("elasticity sweep: need >= 2 flat rates");
  }
  std::vector<double> totals(flat_rates.size());
  for (std::size_t k = 0; k < flat_rates.size(); ++k) {
    totals[k] =
        run_one_step(config, skills, fiscal::TaxSchedule::flat(flat_rates[k]))
            .total_income;
  }
  return fiscal::estimate_elasticity_ols(totals, flat_rates).elasticity;
}

}  // namespace gtb::onestep
