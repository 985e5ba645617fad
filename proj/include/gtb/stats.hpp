#pragma once

#include <span>

namespace gtb::stats {

// Two-sided Welch two-sample t-test (unequal variances, Welch-Satterthwaite
// degrees of freedom). Both groups need at least 2 samples.
//
// Degenerate cases follow the reporting rules used everywhere else in the
// harness: equal means give t = 0, p = 1 even when both variances vanish;
// unequal means with zero pooled variance give t = +/-inf and p at the 1e-12
// floor. p is always clamped to [1e-12, 1].
struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
// Exposed so the t-test's p-value path can be checked against fixtures.
double reg_inc_beta(double a, double b, double x);

}  // namespace gtb::stats
