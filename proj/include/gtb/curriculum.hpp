#pragma once

#include <algorithm>
#include <cmath>

namespace gtb {

// Two training phases with three anneals. Phase one trains agents in a
// no-tax environment while the labor cost ramps in, so exploration is not
// punished before any action earns income. Phase two enables taxes, ramping
// the allowed marginal rate ceiling and cooling the planner's entropy bonus.
struct CurriculumConfig {
  long long phase_one_steps = 25'000'000;      // labor-cost ramp, taxes off
  long long tax_cap_anneal_steps = 27'000'000;  // counted from phase-two start
  long long entropy_anneal_steps = 50'000'000;  // counted from phase-two start
  double initial_tax_cap = 0.10;
  double planner_entropy_start = 0.125;
  double planner_entropy_floor = 0.0125;
};

struct CurriculumState {
  int phase = 1;
  long long step = 0;
  bool taxes_enabled = false;
  double labor_multiplier = 0.0;     // scales the labor coefficient in utility
  double tax_cap = 0.10;             // planner rates above this are masked
  double planner_entropy_coef = 0.125;

  // step is bookkeeping, not part of what the environment experiences.
  friend bool operator==(const CurriculumState& a, const CurriculumState& b) {
    return a.phase == b.phase && a.taxes_enabled == b.taxes_enabled &&
           a.labor_multiplier == b.labor_multiplier &&
           a.tax_cap == b.tax_cap &&
           a.planner_entropy_coef == b.planner_entropy_coef;
  }
};

// Fully annealed state: taxes on, full labor cost, no rate ceiling. This is
// what evaluation episodes run under.
inline CurriculumState curriculum_done() {
  CurriculumState s;
  s.phase = 2;
  s.taxes_enabled = true;
  s.labor_multiplier = 1.0;
  s.tax_cap = 1.0;
  s.planner_entropy_coef = 0.0125;
  return s;
}

inline CurriculumState curriculum_at(const CurriculumConfig& cfg,
                                     long long step) {
  auto ramp = [](long long at, long long duration) {
    if (duration <= 0) return 1.0;
    return std::min(1.0, static_cast<double>(at) / static_cast<double>(duration));
  };
  CurriculumState s;
  s.step = step;
  if (step < cfg.phase_one_steps) {
    s.phase = 1;
    s.taxes_enabled = false;
    s.labor_multiplier = ramp(step, cfg.phase_one_steps);
    s.tax_cap = cfg.initial_tax_cap;
    s.planner_entropy_coef = cfg.planner_entropy_start;
  } else {
    const long long p2 = step - cfg.phase_one_steps;
    s.phase = 2;
    s.taxes_enabled = true;
    s.labor_multiplier = 1.0;
    // std::lerp hits both endpoints exactly, so a finished anneal equals the
    // configured bound bit-for-bit.
    s.tax_cap = std::lerp(cfg.initial_tax_cap, 1.0, ramp(p2, cfg.tax_cap_anneal_steps));
    s.planner_entropy_coef =
        std::lerp(cfg.planner_entropy_start, cfg.planner_entropy_floor,
                  ramp(p2, cfg.entropy_anneal_steps));
  }
  return s;
}

}  // namespace gtb
